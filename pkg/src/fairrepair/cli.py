"""Command-line interface: audit, repair, sweep, experiment, verify.

Every command is deterministic given explicit seeds and overwrites its
outputs byte-identically on rerun. All randomness flows from one root
seed, expanded as ``derive_seed(root, purpose_tag, index)``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import classify, dataio, fairness, repair, riskbound
from .measures import LabeledDataset, tv_distance_discrete

DEFAULT_LAMBDA_STEP = 0.05
DEFAULT_RANDOM_SEEDS = 100


def derive_seed(root: int, tag: str, index: int = 0) -> int:
    """Child seed for one purpose: root seed + tag checksum + index."""
    ss = np.random.SeedSequence(
        [int(root) & 0xFFFFFFFF, zlib.crc32(tag.encode("utf-8")), int(index)]
    )
    return int(ss.generate_state(1, np.uint64)[0])


def _emit_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    print(text)


def _load_scaling(path: str | None):
    if path is None:
        return None
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return dataio.StandardizeParams.from_json_dict(payload)


def _load_model(path: str) -> classify.LogisticModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return classify.LogisticModel.from_json_dict(payload)


def _fit_own_scaling(data: LabeledDataset) -> dataio.StandardizeParams:
    _, _, params = dataio.standardize(data, data)
    return params


# ---------------------------------------------------------------- audit


def cmd_audit(args) -> int:
    model = _load_model(args.model)
    scaling = _load_scaling(args.scaling)
    if args.repaired:
        rep = dataio.read_repaired_csv(args.data)
        X = rep.X if scaling is None else scaling.transform(rep.X)
        pred = classify.predict(model, X)
        report = fairness.disparate_impact(
            pred, rep.s, args.confidence, weights=rep.weights, y=rep.y
        )
        error = (
            None
            if rep.y is None
            else classify.misclassification_error(pred, rep.y, rep.joint_weights)
        )
    else:
        schema = dataio.SchemaConfig.from_json(args.schema)
        data = dataio.load_dataset(args.data, schema)
        X = data.X if scaling is None else scaling.transform(data.X)
        pred = classify.predict(model, X)
        report = fairness.disparate_impact(pred, data.s, args.confidence, y=data.y)
        error = (
            None
            if data.y is None
            else classify.misclassification_error(pred, data.y)
        )
    payload = {"error": error, **report.to_json_dict()}
    _emit_json(payload, args.out)
    return 0


# --------------------------------------------------------------- repair


_METHOD_USES_LAMBDA = {
    "A": False,
    "B": False,
    "C": False,
    "geometric": True,
    "random": True,
}


def _run_repair_method(data, method, lam, seed, plan=None):
    if method == "A":
        return repair.total_repair_A(data, plan)
    if method == "B":
        return repair.total_repair_B(data, plan)
    if method == "C":
        return repair.total_repair_C(data)
    if method == "geometric":
        return repair.geometric_repair(data, lam, plan)
    if method == "random":
        return repair.random_repair(data, lam, seed, plan)
    raise ValueError(f"unknown method {method!r}")


def cmd_repair(args) -> int:
    schema = dataio.SchemaConfig.from_json(args.schema)
    data = dataio.load_dataset(args.data, schema)
    uses_lambda = _METHOD_USES_LAMBDA[args.method]
    if uses_lambda and args.lam is None:
        raise ValueError(f"method {args.method} requires --lambda")
    if not uses_lambda and args.lam is not None:
        raise ValueError(f"method {args.method} ignores lambda; drop --lambda")
    if args.method == "random" and args.seed is None:
        raise ValueError("method random requires --seed")

    scaling = _load_scaling(args.scaling)
    if scaling is None and not args.no_standardize:
        scaling = _fit_own_scaling(data)
    cost_features = None if scaling is None else scaling.transform(data.X)

    plan = None
    if args.method != "C":
        # cost geometry uses the scaled columns; outputs stay in data units
        plan = repair.build_repair_plan(data, cost_features)
        if args.dump_coupling:
            with open(args.dump_coupling, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["i", "j", "mass"])
                for i, j, m in zip(plan.frag_i, plan.frag_j, plan.frag_mass):
                    writer.writerow([int(i), int(j), repr(float(m))])

    repaired = _run_repair_method(data, args.method, args.lam, args.seed, plan)
    dataio.write_repaired_csv(repaired, args.out)

    tv_after = tv_distance_discrete(
        repaired.group_measure(0), repaired.group_measure(1)
    )
    summary = {
        "method": repaired.method,
        "lambda": repaired.lam,
        "seed": repaired.seed,
        "rows_written": int(repaired.n_rows),
        "support_size_group0": int(np.sum(repaired.s == 0)),
        "support_size_group1": int(np.sum(repaired.s == 1)),
        "w2_cost": None if plan is None else plan.total_cost,
        "w2": None if plan is None else math.sqrt(max(plan.total_cost, 0.0)),
        "tv_between_repaired_groups": tv_after,
        "standardized_cost_space": scaling is not None,
        "out": str(args.out),
    }
    _emit_json(summary, None)
    return 0


# ---------------------------------------------------------------- sweep


def _lambda_grid(step: float) -> list[float]:
    count = int(round(1.0 / step))
    return [round(k * step, 10) for k in range(count + 1)]


@dataclass(frozen=True)
class SweepRow:
    lam: float
    method: str
    di: float
    di_lo: float
    di_hi: float
    error: float
    n_seeds: int


def _audit_repaired(model, repaired, confidence):
    pred = classify.predict(model, repaired.X)
    report = fairness.disparate_impact(
        pred, repaired.s, confidence, weights=repaired.weights, y=repaired.y
    )
    error = (
        math.nan
        if repaired.y is None
        else classify.misclassification_error(pred, repaired.y, repaired.joint_weights)
    )
    return report, error


def run_sweep(
    data: LabeledDataset,
    model: classify.LogisticModel,
    lambdas,
    n_seeds: int,
    root_seed: int,
    confidence: float = 0.95,
) -> list[SweepRow]:
    """Re-audit the model after geometric and random repair per lambda."""
    plan = repair.build_repair_plan(data)
    rows: list[SweepRow] = []
    lambdas = sorted(set(float(l) for l in lambdas))
    for lam in lambdas:
        rep = repair.geometric_repair(data, lam, plan)
        report, error = _audit_repaired(model, rep, confidence)
        rows.append(
            SweepRow(lam, "Geometric", report.di, report.di_lo, report.di_hi, error, 1)
        )
    for idx, lam in enumerate(lambdas):
        dis, los, his, errs = [], [], [], []
        for k in range(n_seeds):
            seed = derive_seed(root_seed, "random-repair", idx * n_seeds + k)
            rep = repair.random_repair(data, lam, seed, plan)
            report, error = _audit_repaired(model, rep, confidence)
            dis.append(report.di)
            los.append(report.di_lo)
            his.append(report.di_hi)
            errs.append(error)
        rows.append(
            SweepRow(
                lam,
                "Random",
                float(np.mean(dis)),
                float(np.mean(los)),
                float(np.mean(his)),
                float(np.mean(errs)),
                n_seeds,
            )
        )
    return rows


def _write_sweep_csv(rows: list[SweepRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda", "method", "di", "di_lo", "di_hi", "error", "n_seeds"])
        for r in rows:
            writer.writerow(
                [
                    repr(float(r.lam)),
                    r.method,
                    repr(float(r.di)),
                    repr(float(r.di_lo)),
                    repr(float(r.di_hi)),
                    repr(float(r.error)),
                    int(r.n_seeds),
                ]
            )


def cmd_sweep(args) -> int:
    schema = dataio.SchemaConfig.from_json(args.schema)
    data = dataio.load_dataset(args.data, schema)
    scaling = _load_scaling(args.scaling)
    if scaling is not None:
        data = LabeledDataset(scaling.transform(data.X), data.s, data.y)
    model = _load_model(args.model)
    if args.lambdas:
        lambdas = [float(tok) for tok in args.lambdas.split(",")]
    else:
        lambdas = _lambda_grid(args.lambda_step)
    rows = run_sweep(data, model, lambdas, args.seeds, args.seed, args.confidence)
    _write_sweep_csv(rows, args.out)
    print(f"wrote {len(rows)} sweep rows to {args.out}")
    return 0


# ----------------------------------------------------------- experiment


def cmd_experiment(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    schema = dataio.SchemaConfig.from_json(args.schema)
    data = dataio.load_dataset(args.data, schema)

    split_seed = derive_seed(args.seed, "train-test-split")
    train, test = dataio.split(data, args.test_size, split_seed)
    if args.no_standardize:
        train_w, test_w, params = train, test, None
    else:
        train_w, test_w, params = dataio.standardize(train, test)
        (out_dir / "scaling.json").write_text(
            json.dumps(params.to_json_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    model = classify.fit_logistic(train_w.X, train_w.y)
    (out_dir / "model.json").write_text(
        json.dumps(model.to_json_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )

    pred = classify.predict(model, test_w.X)
    base_report = fairness.disparate_impact(
        pred, test_w.s, args.confidence, y=test_w.y
    )
    base_error = classify.misclassification_error(pred, test_w.y)
    table1 = [
        {
            "model": "logit",
            "error": base_error,
            "di": base_report.di,
            "di_lo": base_report.di_lo,
            "di_hi": base_report.di_hi,
            "ber": base_report.ber,
            "oae_gap": base_report.oae_gap,
        }
    ]
    with open(out_dir / "table1.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "error", "di", "di_lo", "di_hi"])
        row = table1[0]
        writer.writerow(
            [
                row["model"],
                repr(row["error"]),
                repr(row["di"]),
                repr(row["di_lo"]),
                repr(row["di_hi"]),
            ]
        )

    plan = repair.build_repair_plan(test_w)
    table2 = []
    for method in ("A", "B", "C"):
        repaired = _run_repair_method(test_w, method, None, None, plan)
        report, error = _audit_repaired(model, repaired, args.confidence)
        dataio.write_repaired_csv(repaired, out_dir / f"repaired_{method}.csv")
        table2.append(
            {
                "model": "logit",
                "repair": method,
                "error": error,
                "difference": error - base_error,
                "di": report.di,
                "di_lo": report.di_lo,
                "di_hi": report.di_hi,
            }
        )
    with open(out_dir / "table2.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["model", "repair", "error", "difference", "di", "di_lo", "di_hi"]
        )
        for row in table2:
            writer.writerow(
                [
                    row["model"],
                    row["repair"],
                    repr(row["error"]),
                    repr(row["difference"]),
                    repr(row["di"]),
                    repr(row["di_lo"]),
                    repr(row["di_hi"]),
                ]
            )

    lambdas = _lambda_grid(args.lambda_step)
    sweep_rows = run_sweep(
        test_w, model, lambdas, args.seeds, args.seed, args.confidence
    )
    _write_sweep_csv(sweep_rows, out_dir / "sweep.csv")

    summary = {
        "n_rows": data.n,
        "train_rows": train.n,
        "test_rows": test.n,
        "seed": args.seed,
        "confidence": args.confidence,
        "standardized": not args.no_standardize,
        "baseline": table1[0],
        "repairs": table2,
        "notes": "logistic-regression classifier only; tree ensembles are out of scope",
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"experiment report written to {out_dir}")
    return 0


# ---------------------------------------------------------------- verify


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check_theorem21_grid(quick: bool) -> CheckResult:
    from fractions import Fraction

    steps_ab = 30 if quick else 100
    steps_tau = 5 if quick else 10
    mismatches = 0
    total = 0
    for i in range(1, steps_ab + 1):
        a = Fraction(i, steps_ab)
        for j in range(1, steps_ab + 1):
            b = Fraction(j, steps_ab)
            ber = (1 - b + a) / 2
            for k in range(1, steps_tau + 1):
                tau = Fraction(k, steps_tau)
                total += 1
                lhs = fairness.di_ber_equivalence_check(a, tau, ber)
                rhs = a / b <= tau
                if lhs != rhs:
                    mismatches += 1
    return CheckResult(
        "theorem21_di_ber_equivalence",
        mismatches == 0,
        f"{total} grid triples, {mismatches} mismatches",
    )


def _random_measure_pair(rng, max_support=12):
    from .measures import EmpiricalMeasure

    size = int(rng.integers(2, max_support + 1))
    support = np.arange(size, dtype=float).reshape(-1, 1)
    n_atoms0 = int(rng.integers(1, size + 1))
    n_atoms1 = int(rng.integers(1, size + 1))
    idx0 = rng.choice(size, size=n_atoms0, replace=False)
    idx1 = rng.choice(size, size=n_atoms1, replace=False)
    w0 = rng.random(n_atoms0) + 0.05
    w1 = rng.random(n_atoms1) + 0.05
    mu0 = EmpiricalMeasure(support[idx0], w0 / w0.sum())
    mu1 = EmpiricalMeasure(support[idx1], w1 / w1.sum())
    return mu0, mu1


def _check_theorem22(quick: bool) -> CheckResult:
    rng = np.random.Generator(np.random.Philox(key=20220))
    pairs = 50 if quick else 200
    bad = 0
    for _ in range(pairs):
        mu0, mu1 = _random_measure_pair(rng)
        report = fairness.min_ber_oracle(mu0, mu1)
        if fairness.exhaustive_min_ber(mu0, mu1) != report.min_ber:
            bad += 1
    return CheckResult(
        "theorem22_min_ber_oracle", bad == 0, f"{pairs} measure pairs, {bad} mismatches"
    )


def _check_epsilon_predictability(quick: bool) -> CheckResult:
    rng = np.random.Generator(np.random.Philox(key=20221))
    pairs = 50 if quick else 200
    bad = 0
    checked = 0
    for _ in range(pairs):
        mu0, mu1 = _random_measure_pair(rng)
        report = fairness.min_ber_oracle(mu0, mu1)
        eps = float(rng.random()) * 0.5
        if abs(report.min_ber - eps) < 1e-9:
            continue
        checked += 1
        not_predictable = report.min_ber > eps
        if not_predictable != (report.tv < 1 - 2 * eps):
            bad += 1
    return CheckResult(
        "epsilon_predictability_tv",
        bad == 0,
        f"{checked} pairs checked, {bad} mismatches",
    )


def _verification_problems(count: int):
    problems = []
    for k in range(count):
        if k % 2 == 0:
            problems.append(
                riskbound.make_logistic_problem(
                    slope0=0.8 + 0.1 * k,
                    intercept0=-0.2,
                    slope1=1.0 + 0.05 * k,
                    intercept1=0.3,
                    loc0=-1.0 - 0.05 * k,
                    loc1=1.0,
                    pi0=0.35 + 0.01 * k,
                )
            )
        else:
            problems.append(
                riskbound.make_ramp_problem(
                    k0=0.3 + 0.02 * k,
                    center0=-0.4,
                    k1=0.5,
                    center1=0.5,
                    pi0=0.45,
                )
            )
    return problems


def _check_lemma41(quick: bool) -> CheckResult:
    count = 6 if quick else 20
    n = 800 if quick else 2000
    problems = _verification_problems(count)
    failures = sum(
        0 if riskbound.lemma41_check(p, n, seed=1000 + k) else 1
        for k, p in enumerate(problems)
    )
    return CheckResult(
        "lemma41_eta_shift_bound",
        failures == 0,
        f"{count} synthetic problems, {failures} violations",
    )


def _check_theorem41(quick: bool, bound_scale: float) -> CheckResult:
    count = 6 if quick else 20
    n = 800 if quick else 2000
    problems = _verification_problems(count)
    failures = 0
    for k, problem in enumerate(problems):
        seed = 2000 + k
        est = riskbound.excess_risk(problem, n, seed)
        data = problem.sample(n, seed)
        plan = repair.build_repair_plan(data)
        bound = bound_scale * riskbound.bound_theorem41(problem, plan)
        if est.value > bound + 3 * est.stderr:
            failures += 1
    return CheckResult(
        "theorem41_excess_risk_bound",
        failures == 0,
        f"{count} synthetic problems, {failures} violations",
    )


def _check_risk_mixture(quick: bool) -> CheckResult:
    problem = riskbound.make_logistic_problem()
    n = 500 if quick else 1000
    seeds = 30 if quick else 100
    data = problem.sample(n, 31337)
    plan = repair.build_repair_plan(data)
    failures = 0
    details = []
    for lam in (0.25, 0.5, 0.75):
        devs = []
        for k in range(seeds):
            rr, orig, full = riskbound.random_repair_risk_mixture(
                problem, lam, n, seed=5000 + k, plan_data=(data, plan)
            )
            devs.append(rr - ((1 - lam) * orig + lam * full))
        mean = float(np.mean(devs))
        se = float(np.std(devs, ddof=1) / math.sqrt(len(devs)))
        ok = abs(mean) <= 3 * se + 1e-12
        failures += 0 if ok else 1
        details.append(f"lam={lam}: dev={mean:.2e} (3se={3 * se:.2e})")
    return CheckResult("random_repair_risk_mixture", failures == 0, "; ".join(details))


def _check_geometric_pathology(quick: bool) -> CheckResult:
    k_gap = 2
    n = 500 if quick else 2000
    rng = np.random.Generator(np.random.Philox(key=777))
    x0 = rng.uniform(k_gap, k_gap + 1, size=n)
    x1 = rng.uniform(-k_gap - 1, -k_gap, size=n)
    data = LabeledDataset(
        np.concatenate([x0, x1]).reshape(-1, 1),
        np.concatenate([np.zeros(n, np.int8), np.ones(n, np.int8)]),
    )
    plan = repair.build_repair_plan(data)
    worst = 0.0
    plateau_ok = True
    for lam in [round(0.1 * k, 10) for k in range(1, 10)]:
        rep = repair.geometric_repair(data, lam, plan)
        m0 = rep.s == 0
        tv_est = fairness.tv_ks_1d(
            rep.X[m0, 0], rep.X[~m0, 0], weights0=rep.weights[m0], weights1=rep.weights[~m0]
        )
        expected = min(1.0, (1 - lam) * (2 * k_gap + 1))
        worst = max(worst, abs(tv_est - expected))
        if lam <= 2 * k_gap / (2 * k_gap + 1) and tv_est < 0.999:
            plateau_ok = False
    passed = worst <= 0.05 and plateau_ok
    return CheckResult(
        "geometric_repair_tv_pathology",
        passed,
        f"max |tv - min(1,(1-lam)(2K+1))| = {worst:.4f}, plateau={'ok' if plateau_ok else 'broken'}",
    )


def run_verification(*, quick: bool = False, bound_scale: float = 1.0):
    return [
        _check_theorem21_grid(quick),
        _check_theorem22(quick),
        _check_epsilon_predictability(quick),
        _check_lemma41(quick),
        _check_theorem41(quick, bound_scale),
        _check_risk_mixture(quick),
        _check_geometric_pathology(quick),
    ]


def cmd_verify(args) -> int:
    results = run_verification(quick=args.quick, bound_scale=args.bound_scale)
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name.ljust(width)}  {r.detail}")
    return 0 if all(r.passed for r in results) else 1


# ----------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairrepair",
        description=(
            "Repair tabular datasets toward the group barycenter and audit "
            "classifier fairness before and after."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_audit = sub.add_parser("audit", help="fairness report for a trained model")
    p_audit.add_argument("--data", required=True)
    p_audit.add_argument("--schema")
    p_audit.add_argument("--model", required=True)
    p_audit.add_argument("--confidence", type=float, default=0.95)
    p_audit.add_argument(
        "--repaired",
        action="store_true",
        help="input is a repaired CSV with weight/provenance columns",
    )
    p_audit.add_argument("--scaling", help="JSON standardisation parameters to apply")
    p_audit.add_argument("--out")
    p_audit.set_defaults(func=cmd_audit)

    p_repair = sub.add_parser("repair", help="write a repaired copy of a dataset")
    p_repair.add_argument("--data", required=True)
    p_repair.add_argument("--schema", required=True)
    p_repair.add_argument(
        "--method", required=True, choices=["A", "B", "C", "geometric", "random"]
    )
    p_repair.add_argument("--lambda", dest="lam", type=float, default=None)
    p_repair.add_argument("--seed", type=int, default=None)
    p_repair.add_argument("--out", required=True)
    p_repair.add_argument(
        "--no-standardize",
        action="store_true",
        help="use raw feature scales for the transport cost",
    )
    p_repair.add_argument("--scaling", help="JSON standardisation parameters to apply")
    p_repair.add_argument(
        "--dump-coupling", help="write the optimal coupling as sparse i,j,mass CSV"
    )
    p_repair.set_defaults(func=cmd_repair)

    p_sweep = sub.add_parser("sweep", help="DI and error across repair amounts")
    p_sweep.add_argument("--data", required=True)
    p_sweep.add_argument("--schema", required=True)
    p_sweep.add_argument("--model", required=True)
    p_sweep.add_argument("--lambdas", help="comma-separated grid, e.g. 0,0.5,1")
    p_sweep.add_argument("--lambda-step", type=float, default=DEFAULT_LAMBDA_STEP)
    p_sweep.add_argument("--seeds", type=int, default=DEFAULT_RANDOM_SEEDS)
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--confidence", type=float, default=0.95)
    p_sweep.add_argument("--scaling")
    p_sweep.add_argument("--out", required=True)
    p_sweep.set_defaults(func=cmd_sweep)

    p_exp = sub.add_parser("experiment", help="full split/fit/audit/repair pipeline")
    p_exp.add_argument("--data", required=True)
    p_exp.add_argument("--schema", required=True)
    p_exp.add_argument("--out", required=True)
    p_exp.add_argument("--test-size", type=int, default=2500)
    p_exp.add_argument("--seed", type=int, default=0)
    p_exp.add_argument("--seeds", type=int, default=DEFAULT_RANDOM_SEEDS)
    p_exp.add_argument("--lambda-step", type=float, default=DEFAULT_LAMBDA_STEP)
    p_exp.add_argument("--confidence", type=float, default=0.95)
    p_exp.add_argument("--no-standardize", action="store_true")
    p_exp.set_defaults(func=cmd_experiment)

    p_verify = sub.add_parser("verify", help="run the numeric theory checks")
    p_verify.add_argument("--quick", action="store_true", help="smaller, faster sizes")
    p_verify.add_argument("--bound-scale", type=float, default=1.0, help=argparse.SUPPRESS)
    p_verify.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # surface module errors with a nonzero exit code
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:  # pragma: no cover - console script shim
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
