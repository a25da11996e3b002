"""Gluing three charts of a fat line and catching an inconsistent gauge.

Each chart is the minimal model for a different inner product.  Scaling
gauges relate them; every triple is certified by filling a 2-horn in the
Maurer-Cartan nerve of the convolution algebra.  Changing one gauge breaks
the cocycle, and the failing triple comes with a witness.
"""

import random
from fractions import Fraction

from linfty.atlas import glue_h0, three_chart_atlas, verify_cocycle
from linfty.ce import chart_corpus
from linfty.graded import MultiMap
from linfty.nerve import ConvolutionAlgebra, horn_fill, sample_horn


def main():
    g = chart_corpus()["toy"]
    conv = ConvolutionAlgebra(g, g, 3)
    sp = g.space
    mu = conv.constant({1: MultiMap((sp,), sp, 0, {(0,): {0: Fraction(2)}, (1,): {1: Fraction(4)}})})
    for j in range(3):
        fill = horn_fill(conv, sample_horn(conv, mu, 2, j, random.Random(j)), 2, j)
        print(f"horn {j} of Delta^2: filled={fill.ok}, ledgers h={fill.ledger['h_bound']} d={fill.ledger['d_bound']}")

    atlas = three_chart_atlas(3)
    rep = verify_cocycle(atlas)
    print("three-chart atlas cocycle:", rep["ok"], f"({len(rep['triples'])} triples)")
    glue = glue_h0(atlas)
    print("H0 of each chart:", {x: p["basis"] for x, p in glue["charts"].items()})
    print("induced map a->c on H0:", glue["transitions"]["a->c"])

    bad = verify_cocycle(three_chart_atlas(3, consistent=False))
    first = bad["failures"][0]
    print("inconsistent atlas:", bad["ok"], "first failing triple", first["triple"], "witness", first["witness"])


if __name__ == "__main__":
    main()
