"""Repeat the G-S parameter-recovery experiment over many seeds.

Reports how often the 95% credible interval covers the generating value
and the spread of the relative error of the posterior median.

    python scripts/parameter_recovery.py --replicates 20
"""

import argparse

import numpy as np

from hsens.dataio import ECOLOGY_TABLE, LogUniformCovariates, QuantileCovariates, synthesize
from hsens.likelihood import ObservationModel, ObsKind
from hsens.mcmc import SamplerConfig, run_chain, summarize
from hsens.models import ModelKind, ParamVector

TRUTH = {"alpha": 1.77, "c": 0.7}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--replicates", type=int, default=20)
    ap.add_argument("--n", type=int, default=130)
    ap.add_argument("--sigma", type=float, default=12.0)
    ap.add_argument("--iters", type=int, default=20_000)
    ap.add_argument("--burnin", type=int, default=2_000)
    ap.add_argument("--covariates", choices=["loguniform", "quantile"], default="loguniform")
    args = ap.parse_args()

    gen = (LogUniformCovariates.from_table(ECOLOGY_TABLE) if args.covariates == "loguniform"
           else QuantileCovariates.from_table(ECOLOGY_TABLE))
    covered = {k: 0 for k in TRUTH}
    errors = {k: [] for k in TRUTH}
    for seed in range(args.replicates):
        data = synthesize(ModelKind.GlanzelSchubert, ParamVector(**TRUTH), ObservationModel.gaussian(args.sigma),
                          args.n, gen, seed=seed)
        chain = run_chain(SamplerConfig(iterations=args.iters, burn_in=args.burnin, seed=seed),
                          ModelKind.GlanzelSchubert, ObsKind.TruncGaussian, data)
        summ = summarize(chain)
        for name, truth in TRUTH.items():
            s = summ[name]
            covered[name] += s.ci_low <= truth <= s.ci_high
            errors[name].append(s.median / truth - 1)
        print(f"seed {seed:3d}: " + "  ".join(f"{k}={summ[k].median:.3f}" for k in TRUTH))

    for name in TRUTH:
        err = np.array(errors[name])
        print(f"{name}: coverage {covered[name]}/{args.replicates}, "
              f"median rel. error {np.median(err):+.3f}, max |rel. error| {np.max(np.abs(err)):.3f}")


if __name__ == "__main__":
    main()
