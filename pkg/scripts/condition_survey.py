"""Survey the convergence conditions over the function catalogs.

Produces the full family x generator x shaper verdict matrix with a
heatmap, then cross-validates every decided scalar-family cell against a
direct bias quadrature on a concrete model, printing any disagreement.

Run:
    python scripts/condition_survey.py [--out-dir out/conditions] [--d 2]
"""

import argparse
import os

from invdiv.bias import bias_quadrature
from invdiv.conditions import condition_matrix, check_normalization, write_condition_csv
from invdiv.distributions import GigtMixtureModel, IgtModel
from invdiv.experiments import write_condition_heatmap
from invdiv.funcs import default_f_catalog, default_g_catalog, parse_f, parse_g


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="out/conditions")
    parser.add_argument("--d", type=int, default=2, help="dimension for the multivariate family")
    args = parser.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)

    g_list = default_g_catalog()
    f_list = default_f_catalog()
    rows = condition_matrix(g_list, f_list, ["igt", "gigt_mixture", "migt"], d=args.d)
    csv_path = os.path.join(args.out_dir, "condition_matrix.csv")
    write_condition_csv(rows, csv_path)
    heat_path = write_condition_heatmap(rows, os.path.join(args.out_dir, "condition_matrix.svg"))

    print(f"{'family':13s} {'g':10s} {'f':13s} verdict     bias-quadrature")
    disagreements = 0
    for row in rows:
        verdict = row["status"]
        cross = ""
        if row["family"] in ("igt", "gigt_mixture") and verdict != "inconclusive":
            g, f = parse_g(row["g"]), parse_f(row["f"])
            if row["family"] == "igt":
                model = IgtModel(2.0, 3.0, g)
            elif check_normalization("gigt_mixture", g).is_finite:
                model = GigtMixtureModel(2.0, 3.0, g)
            else:
                model = None
                cross = "model does not exist"
            if model is not None:
                bias = bias_quadrature(model, f)
                cross = bias.verdict
                if (verdict == "finite") != (bias.verdict == "vanishes"):
                    cross += "  <-- DISAGREES"
                    disagreements += 1
        print(f"{row['family']:13s} {row['g']:10s} {row['f']:13s} {verdict:11s} {cross}")
    print(f"\n{disagreements} disagreement(s); wrote {csv_path} and {heat_path}")
    return 0 if disagreements == 0 else 1


if __name__ == "__main__":
    raise SystemExit(main())
