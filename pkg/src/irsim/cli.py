"""Command line front end: run experiments, print the capacitance
partition, and run the quick invariant suite."""

import argparse
import json
import logging
import sys

import numpy as np

from . import core, harness, power_min, selection, sum_rate
from .reflection import (DEFAULT_CIRCUIT, impedance, partition_capacitance,
                         reflection_coefficient, random_state)
from .scenario import (SystemConfig, draw_channels, place_scenario, trial_rng)

log = logging.getLogger(__name__)

# Large configuration selected by --paper-scale; much slower than the defaults.
FULL_SCALE = dict(S=3, K=3, Nt=16, M=64)


def load_config(path):
    """Config file with optional "system" / "experiment" sections.

    A flat file is treated as SystemConfig keys.  JSON always works; TOML
    needs Python >= 3.11.
    """
    if path is None:
        return {}, {}
    if str(path).endswith(".toml"):
        try:
            import tomllib
        except ImportError as exc:
            raise SystemExit("TOML configs need Python >= 3.11; use JSON") from exc
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    else:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    if "system" in data or "experiment" in data:
        return data.get("system", {}), data.get("experiment", {})
    return data, {}


def cmd_run(args):
    sys_overrides, exp_overrides = load_config(args.config)
    if args.experiment not in harness.EXPERIMENTS:
        raise SystemExit("unknown experiment %r; choose from: %s"
                         % (args.experiment,
                            ", ".join(sorted(harness.EXPERIMENTS))))
    kind, sweep, values = harness.EXPERIMENTS[args.experiment]
    spec_kwargs = dict(kind=kind, sweep=sweep, values=values,
                       out=args.out, name=args.experiment)
    spec_kwargs.update(exp_overrides)
    if args.trials is not None:
        spec_kwargs["trials"] = args.trials
    if args.seed is not None:
        spec_kwargs["master_seed"] = args.seed
    if args.jobs is not None:
        spec_kwargs["jobs"] = args.jobs
    spec = harness.ExperimentSpec.from_dict(spec_kwargs)

    cfg_kwargs = dict(sys_overrides)
    if args.paper_scale:
        cfg_kwargs.update(FULL_SCALE)
    cfg = SystemConfig.from_dict(cfg_kwargs) if cfg_kwargs else SystemConfig()

    rows = harness.run_experiment(spec, cfg)
    means = harness.summarize(rows)
    for (value, scheme), mean in sorted(means.items()):
        print("%s=%-8g %-18s %.6g" % (spec.sweep, value, scheme, mean))
    print("wrote %d rows to %s" % (len(rows), spec.out))
    return 0


def cmd_partition(args):
    sys_overrides, _ = load_config(args.config)
    cfg = SystemConfig.from_dict(sys_overrides) if sys_overrides else SystemConfig()
    plan = cfg.frequency_plan()
    part = partition_capacitance(DEFAULT_CIRCUIT, plan)
    print("%-12s %-14s %-14s" % ("freq_GHz", "C_low_pF", "C_high_pF"))
    for f, (lo, hi) in zip(part.frequencies, part.intervals):
        print("%-12.4f %-14.6f %-14.6f" % (f / 1e9, lo * 1e12, hi * 1e12))
    for lo, hi in part.gray:
        print("%-12s %-14.6f %-14.6f" % ("(unused)", lo * 1e12, hi * 1e12))
    return 0


def _check(name, fn):
    try:
        ok, detail = fn()
    except Exception as exc:                    # noqa: BLE001 - report any failure
        ok, detail = False, "raised %r" % exc
    print("%-38s %s%s" % (name, "PASS" if ok else "FAIL",
                          "" if ok else "  (%s)" % detail))
    return ok


def _phase_swing(f_hz):
    c = np.linspace(1.3e-12, 2.0e-12, 512)
    ang = np.unwrap(np.angle([reflection_coefficient(DEFAULT_CIRCUIT, ci, f_hz)
                              for ci in c]))
    return np.degrees(ang.max() - ang.min())


def cmd_validate(_args):
    rng = np.random.default_rng(0)

    def circuit():
        swings = [_phase_swing(f) for f in (2.345e9, 1.885e9, 2.605e9)]
        ok = (abs(swings[0] - 260) <= 15 and abs(swings[1] - 40) <= 15
              and abs(swings[2] - 45) <= 15)
        return ok, "swings %s" % np.round(swings, 1)

    def partition():
        plan = SystemConfig().frequency_plan()
        iv = sorted(partition_capacitance(DEFAULT_CIRCUIT, plan).intervals)
        ok = all(iv[i][1] <= iv[i + 1][0] + 1e-18 for i in range(len(iv) - 1))
        return ok, "intervals %s" % (iv,)

    def socp_k1():
        h = (rng.standard_normal(4) + 1j * rng.standard_normal(4))
        W = power_min.solve_beamforming_socp(h.conj()[None, :], 2.0, 1e-3)
        p_ref = 2.0 * 1e-3 / np.linalg.norm(h) ** 2
        rel = abs(core.bs_power(W) - p_ref) / p_ref
        return rel < 1e-8, "rel err %.2e" % rel

    def manifold_grad():
        n = 5
        X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        D = X + X.conj().T
        b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        theta = np.exp(1j * rng.uniform(0, 2 * np.pi, n))
        g = power_min.phase_egrad(D, b, theta)
        eps = 1e-6
        worst = 0.0
        for i in range(n):
            for delta in (eps, 1j * eps):
                fp = power_min.phase_objective(D, b, theta + np.eye(n)[i] * delta)
                fm = power_min.phase_objective(D, b, theta - np.eye(n)[i] * delta)
                fd = (fp - fm) / (2 * eps)
                an = g[i].real if delta == eps else g[i].imag
                worst = max(worst, abs(fd - an) / max(abs(fd), 1e-12))
        return worst < 1e-5, "max rel err %.2e" % worst

    def wmmse_monotone():
        cfg = SystemConfig()
        r = trial_rng(0, 0)
        ch = draw_channels(cfg, place_scenario(cfg, r), r)
        res = sum_rate.run_algorithm2(ch, cfg, rng=trial_rng(0, 0, 1))
        tr = np.array(res.rate_trace)
        ok = bool(np.all(np.diff(tr) >= -1e-9)) and res.converged
        return ok, "trace len %d" % len(tr)

    def mm_monotone():
        cfg = SystemConfig()
        r = trial_rng(1, 0)
        ch = draw_channels(cfg, place_scenario(cfg, r), r)
        W, state, _ = power_min.run_algorithm1(ch, cfg, rng=trial_rng(1, 0, 1))
        quad = selection.build_selection_quadratics(
            ch, W, state.phi, cfg.gamma)
        st = selection.MmState(A=np.full((cfg.S, cfg.M), 1.0 / cfg.S), tau=1e-12)
        prev = selection.penalized_objective(quad, st.A, st.tau)
        for _ in range(20):
            st = selection.mm_step(quad, st)
            cur = selection.penalized_objective(quad, st.A, st.tau)
            if cur < prev - 1e-9 * (1 + abs(prev)):
                return False, "objective decreased"
            prev = cur
        return True, ""

    checks = [("circuit phase swings", circuit),
              ("capacitance partition disjoint", partition),
              ("SOCP closed form (K=1)", socp_k1),
              ("manifold gradient vs finite diff", manifold_grad),
              ("WMMSE monotone convergence", wmmse_monotone),
              ("MM penalized objective monotone", mm_monotone)]
    results = [_check(name, fn) for name, fn in checks]
    return 0 if all(results) else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="irs-sim",
        description="IRS-assisted multi-cell multi-band simulation harness")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a Monte-Carlo experiment")
    p_run.add_argument("--config", default=None,
                       help="JSON/TOML config (system + experiment sections)")
    p_run.add_argument("--experiment", required=True,
                       help="one of: %s" % ", ".join(sorted(harness.EXPERIMENTS)))
    p_run.add_argument("--out", required=True, help="output CSV path")
    p_run.add_argument("--seed", type=int, default=None, help="master seed")
    p_run.add_argument("--trials", type=int, default=None)
    p_run.add_argument("--jobs", type=int, default=None,
                       help="parallel trial workers")
    p_run.add_argument("--paper-scale", action="store_true",
                       help="use the paper-scale sizes (slow)")
    p_run.set_defaults(func=cmd_run)

    p_part = sub.add_parser("partition",
                            help="print the capacitance partition table")
    p_part.add_argument("--config", default=None)
    p_part.set_defaults(func=cmd_partition)

    p_val = sub.add_parser("validate", help="run the quick invariant suite")
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
