"""Kuranishi maps and potentials on small cyclic models.

Three flavours: a surface-type model where the unit kills the curvature, a
threefold-type model where the curvature is a gradient, and a fourfold-type
model where the curvature is isotropic.
"""

from linfty.kuranishi import check_dim2, check_dim4, cs_potential, finite_difference_check, poly_to_json
from linfty.models import isotropic_dim4, nonunital_control, surface, toy_dim3, two_variable_dim3
from linfty.kuranishi import LocalModel


def main():
    genus_two = LocalModel(*surface(2), 4, "surface2")
    print("surface of genus 2, <kappa, 1> =", check_dim2(genus_two)["kappa_dot_unit"])
    control = check_dim2(nonunital_control())
    print("without a unit, <kappa, e> =", control["kappa_dot_unit"], "passed:", control["passed"])

    for model in (toy_dim3(), two_variable_dim3()):
        res = cs_potential(model)
        print(f"{model.name}: Psi =", poly_to_json(res["psi"], model.variables))
        print("  dPsi = iota kappa exactly:", res["holds"],
              " finite-difference gap:", f"{finite_difference_check(model):.1e}")

    iso = isotropic_dim4()
    cert = check_dim4(iso)
    print("isotropic model kappa:", {iso.algebra.space.names[o]: str(p.as_expr()) for o, p in cert["kappa"].items()})
    print("  <kappa, kappa> =", cert["kappa_kappa"], " <d kappa, kappa> =", cert["dkappa_kappa"])


if __name__ == "__main__":
    main()
