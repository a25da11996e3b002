"""Jet charts of Chevalley-Eilenberg algebras and their degree-zero cohomology.

A bracket l2(x, x) = 2y makes the Maurer-Cartan equation b^2 = 0, so the
functions on the derived zero locus are Q[t]/(t^2).  Other fibers give a
reduced point, a node and a cubic critical locus.
"""

from linfty.ce import bicomplex_consistency, build_jet_chart, ce_cohomology, chart_corpus


def main():
    corpus = chart_corpus()
    for name in ("fat_point", "regular_sequence", "node", "cubic"):
        chart = build_jet_chart(corpus[name], 4)
        res = ce_cohomology(chart, (-2, 0))
        print(f"{name}: chart identities {chart.checks}")
        print(f"  cohomology by degree {res['total']}, H0 = Q[t]/{tuple(res['H0']['relations'])}"
              f" with basis {res['H0']['basis']} (weights up to {res['P']})")
        if chart.m == 2:
            print("  total complex agrees with the Koszul side:", bicomplex_consistency(chart)["agree"])


if __name__ == "__main__":
    main()
