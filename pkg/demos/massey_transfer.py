"""Transfer the Massey dg algebra to its cohomology and watch m3 appear.

The algebra has a degree-one class whose triple product is defined but not
expressible through m2.  Transfer along the harmonic retraction records it
as m3, and the heat flow interpolates between id and I o P.
"""

from linfty import dga
from linfty.hodge import HeatFamily, retraction_from_inner_product
from linfty.transfer import homotopy_residual, transfer


def show(label, f):
    entries = f.to_json()["entries"]
    print(f"{label}:" + ("" if entries else " (zero)"))
    for e in f.to_json()["entries"]:
        print(f"  {' , '.join(e['in'])} -> {e['coeff']} {e['out']}")


def main():
    alg = dga.massey()
    print("ambient basis:", list(zip(alg.space.names, alg.space.degrees)))
    r = retraction_from_inner_product(alg)
    print("cohomology:", list(zip(r.H.names, r.H.degrees)))

    tr = transfer(alg, r, 4)
    for k in (2, 3, 4):
        show(f"m{k}", tr.minimal.op(k))
    print("A-infinity relations up to arity 5:", tr.minimal.relations_hold(5))
    print("I and P are morphisms up to arity 4:", tr.I.is_morphism(4), tr.P.is_morphism(4))

    heat = HeatFamily(alg, r)
    for t in (0.1, 1.0, 10.0):
        worst = max(homotopy_residual(alg, r, heat, n, t).max_abs() for n in (1, 2, 3))
        print(f"heat homotopy residual at t={t}: {worst:.2e}")


if __name__ == "__main__":
    main()
