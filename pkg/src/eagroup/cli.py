"""Command-line driver: ``eagroup run|describe|verify``.

Exit codes: 0 success, 2 invalid config or usage, 3 numeric or resource
failure.  Diagnostics are a single line on stderr.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import dynamics, flows, groups, mixing, spectral
from .errors import EAGroupError, NumericError, ResourceError, SearchFailure, UsageError, ValidationError
from .ring import GenomeSpace

log = logging.getLogger("eagroup")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def config_hash(config) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


# -- experiment kinds -------------------------------------------------------------

def _run_orbits(config, rng):
    space = cfgmod.build_space(config)
    group = cfgmod.build_group(config, space)
    part = groups.orbit_partition(group)
    stabilizers = [len(groups.stabilizer_of(group, c[0])) for c in part.classes]
    csv = ["representative,orbit_size,stabilizer_order"]
    csv += [f"{c[0]},{len(c)},{s}" for c, s in zip(part.classes, stabilizers)]
    return {
        "orbits.json": _dump({"group_order": group.order, "orbits": part.to_json(),
                              "invariant_points": sorted(groups.invariant_points(group))}),
        "orbits.csv": "\n".join(csv) + "\n",
    }


def _run_schema(config, rng):
    space = cfgmod.build_space(config)
    mask = config["experiment"]["mask"]
    if mask >= space.n:
        raise ValidationError(f"mask {mask} outside [0, {space.n})", field="experiment.mask")
    rel = groups.schema_family_from_mask(space, mask)
    return {"schema.json": _dump({"mask": mask, "classes": rel.to_json()})}


def _run_coverage(config, rng):
    space = cfgmod.build_space(config)
    exp = config.get("experiment", {})
    spec = exp.get("relations", "digits")
    if spec == "digits":
        rels = [groups.digit_relation(space, i) for i in range(space.l)]
        names = [f"digit{i}" for i in range(space.l)]
    else:
        for m in spec:
            if m >= space.n:
                raise ValidationError(f"mask {m} outside [0, {space.n})", field="experiment.relations")
        rels = [groups.schema_family_from_mask(space, m) for m in spec]
        names = [f"mask{m}" for m in spec]
    if "drop" in exp:
        k = exp["drop"]
        if k >= len(rels):
            raise ValidationError(f"drop index {k} outside the family", field="experiment.drop")
        del rels[k], names[k]
    if not rels:
        raise ValidationError("relation family is empty", field="experiment.relations")
    ok, witness = groups.covers(rels)
    image = groups.chromosome_image(rels)
    return {"coverage.json": _dump({"relations": names, "covers": ok,
                                    "witness": list(witness) if witness else None,
                                    "image_size": image.size})}


def _run_mix(config, rng):
    space = cfgmod.build_space(config)
    model = cfgmod.build_heuristic(config, space)
    exp = config.get("experiment", {})
    rows = ["sample,max_abs_diff"]
    worst = 0.0
    a = None
    if space.n <= mixing.TENSOR_CAP:
        a = mixing.symmetrize(mixing.child_kernel_tensor(space, model.crossover, model.mutation, model.order))
    for k in range(exp.get("samples", 1)):
        p = cfgmod.build_population(exp.get("p", "uniform"), space.n, rng, field="experiment.p")
        fast = model.mix(p)
        diff = float(np.max(np.abs(fast - mixing.mix_oracle(a, p)))) if a is not None else float("nan")
        worst = max(worst, diff)
        rows.append(f"{k},{_fmt(diff)}")
    mm = model.mm.entries
    mm_csv = "\n".join(",".join(_fmt(v) for v in row) for row in mm) + "\n"
    return {
        "mixing_matrix.csv": mm_csv,
        "mix.csv": "\n".join(rows) + "\n",
        "mix.json": _dump({"max_abs_diff": worst, "fitness": [float(v) for v in model.phi]}),
    }


def _run_evolve(config, rng):
    space = cfgmod.build_space(config)
    model = cfgmod.build_heuristic(config, space)
    exp = config.get("experiment", {})
    p0 = cfgmod.build_population(exp.get("p0", "uniform"), space.n, rng)
    traj = dynamics.iterate(model, p0, exp.get("steps", 100), tol=exp.get("tol", 0.0))
    out = {"trajectory.csv": traj.to_csv()}
    if exp.get("fixed_point", False):
        report = dynamics.find_fixed_point(model, traj.final)
        out["fixed_point.json"] = report.to_json() + "\n"
    return out


def _run_sample(config, rng):
    space = cfgmod.build_space(config)
    model = cfgmod.build_heuristic(config, space)
    exp = config.get("experiment", {})
    p0 = cfgmod.build_population(exp.get("p0", "uniform"), space.n, rng)
    base = config.get("seed", 0)
    seeds = [np.random.SeedSequence([base, k]) for k in range(exp.get("seeds", 1))]
    cmp = dynamics.model_vs_sample(model, p0, exp.get("mu", 1000), exp.get("steps", 1), seeds)
    return {"sample.csv": cmp.to_csv()}


def _run_flow(config, rng):
    exp = config["experiment"]
    problem, kind = exp["problem"], exp["flow"]
    cfg = cfgmod.build_integrator(exp)
    if kind == "double_bracket":
        if problem["preset"] != "matrix" or "A" not in problem:
            raise ValidationError("double_bracket needs the matrix preset with A", field="experiment.problem")
        N = np.diag(problem["N"]) if "N" in problem else None
        res = flows.double_bracket_flow(flows.MatrixFlowProblem(np.asarray(problem["A"], float), N))
        T = res.terminal
        k = T.shape[0]
        rows = ["t,offdiag_norm," + ",".join(f"h{i}{j}" for i in range(k) for j in range(k))]
        for t, H in zip(res.times, res.matrices):
            off = np.linalg.norm(H - np.diag(np.diag(H)))
            rows.append(",".join(_fmt(v) for v in [t, off, *H.ravel()]))
        return {"flow.csv": "\n".join(rows) + "\n",
                "flow.json": _dump({"converged": bool(res.converged),
                                    "diagonal": [float(v) for v in np.diag(T)]})}
    obj, con, x0 = cfgmod.build_flow_problem(problem)
    x0 = np.asarray(exp.get("x0", x0), dtype=float)
    if obj.dim is not None and x0.size != obj.dim:
        raise ValidationError(f"x0 must have {obj.dim} entries", field="experiment.x0")
    if kind == "exit":
        if "direction" not in exp:
            raise ValidationError("exit search needs a direction", field="experiment.direction")
        rep = flows.exit_point_search(obj, con, x0, exp["direction"], h=exp.get("step", 1e-2),
                                      horizon=exp.get("horizon", 10.0))
        return {"exit.json": _dump(rep.to_dict())}
    if kind == "gradient":
        res = flows.gradient_flow(obj, x0, cfg)
    elif kind == "quotient":
        if con is None:
            raise ValidationError("quotient flow needs a constrained preset", field="experiment.problem.preset")
        res = flows.quotient_gradient_flow(con, x0, cfg)
    else:
        if con is None:
            raise ValidationError("projected flow needs a constrained preset", field="experiment.problem.preset")
        res = flows.projected_gradient_flow(obj, con, x0, cfg)
    summary = {"converged": bool(res.converged), "terminal": [float(v) for v in res.terminal]}
    if res.classification:
        summary["classification"] = res.classification
    return {"flow.csv": res.to_csv(), "flow.json": _dump(summary)}


def _run_spectrum(config, rng):
    exp = config.get("experiment", {})
    if "matrix" in exp:
        rep = spectral.spectrum(np.asarray(exp["matrix"], dtype=float))
        return {"spectrum.json": rep.to_json() + "\n"}
    space = cfgmod.build_space(config)
    model = cfgmod.build_heuristic(config, space)
    p = cfgmod.build_population(exp.get("p0", "uniform"), space.n, rng)
    rep = dynamics.find_fixed_point(model, p)
    return {"spectrum.json": spectral.ea_map_spectrum(model, rep.point).to_json() + "\n"}


def _run_jsr(config, rng):
    exp = config["experiment"]
    mats = [np.asarray(m, dtype=float) for m in exp["matrices"]]
    shape = mats[0].shape
    if len(shape) != 2 or shape[0] != shape[1] or any(m.shape != shape for m in mats):
        raise ValidationError("matrices must be square and of equal size", field="experiment.matrices")
    seq = spectral.jsr_sequence(mats, exp["depth"])
    rows = ["depth,lower,upper"] + [f"{b.depth},{_fmt(b.lower)},{_fmt(b.upper)}" for b in seq["bounds"]]
    last = seq["bounds"][-1]
    return {"jsr.csv": "\n".join(rows) + "\n",
            "jsr.json": _dump({"lower": last.lower, "upper": last.upper, "depth": last.depth,
                               "lower_product": list(last.lower_product),
                               "lower_nondecreasing": seq["lower_nondecreasing"],
                               "upper_nonincreasing": seq["upper_nonincreasing"]})}


RUNNERS = {
    "orbits": _run_orbits, "schema": _run_schema, "coverage": _run_coverage, "mix": _run_mix,
    "evolve": _run_evolve, "sample": _run_sample, "flow": _run_flow, "spectrum": _run_spectrum,
    "jsr": _run_jsr,
}


def run_config(config, out_root=None) -> Path:
    """Validate, execute and write a run directory; returns its path."""
    cfgmod.validate(config)
    rng = mixing.as_rng(config.get("seed", 0))
    files = RUNNERS[config["kind"]](config, rng)
    root = Path(out_root or os.environ.get("OUT_DIR") or config.get("output") or "runs")
    stamp = _dt.datetime.now(_dt.timezone.utc).strftime("%Y%m%dT%H%M%S%fZ")
    base = f"{config['kind']}-{config_hash(config)[:12]}-{stamp}"
    run_dir = root / base
    k = 1
    while run_dir.exists():
        run_dir = root / f"{base}-{k}"
        k += 1
    run_dir.mkdir(parents=True)
    files = {"config.json": _dump(config), **files}
    for name, text in files.items():
        with open(run_dir / name, "x", newline="\n") as fh:
            fh.write(text)
    return run_dir


# -- verify -----------------------------------------------------------------------

FAULTS = ("arithmetic", "mix", "eigen", "dft", "jacobian", "orbits")


def _check_arithmetic(fault):
    bad = 0
    for d, l in [(2, 3), (3, 2), (5, 2)]:
        sp = GenomeSpace(d, l)
        u, v = np.meshgrid(np.arange(sp.n), np.arange(sp.n), indexing="ij")
        add, mul = sp.add(u, v), sp.mul(u, v)
        for a in range(sp.n):
            for b in range(sp.n):
                da = [(a // d ** i) % d for i in range(l)]
                db = [(b // d ** i) % d for i in range(l)]
                ref_add = sum(((x + y) % d) * d ** i for i, (x, y) in enumerate(zip(da, db)))
                ref_mul = sum(((x * y) % d) * d ** i for i, (x, y) in enumerate(zip(da, db)))
                if fault:
                    ref_add += 1
                bad += int(add[a, b] != ref_add) + int(mul[a, b] != ref_mul)
    return bad == 0, f"{bad} mismatches"


def _check_mix(fault):
    sp = GenomeSpace(2, 3)
    cx, mu = mixing.CrossoverSpec.uniform(sp), mixing.MutationSpec(0.03)
    a = mixing.symmetrize(mixing.child_kernel_tensor(sp, cx, mu))
    mm = mixing.mixing_matrix(a)
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(20):
        p = rng.dirichlet(np.ones(sp.n))
        fast = mixing.mix(mm, p, sp)
        if fault:
            fast = fast + 1e-6
        worst = max(worst, float(np.max(np.abs(fast - mixing.mix_oracle(a, p)))))
    return worst < 1e-12, f"max diff {worst:.1e}"


def _check_eigen(fault):
    q = 0.1
    K = mixing.MutationSpec(q).kernel(GenomeSpace(2, 1))
    rep = spectral.spectrum(K)
    expected = 1 - 2 * q
    if fault:
        expected += 1e-3
    err = max(abs(rep.radius - 1.0), abs(rep.second_modulus - expected))
    return err < 1e-12, f"error {err:.1e}"


def _check_dft(fault):
    rng = np.random.default_rng(1)
    worst = 0.0
    for d, l in [(2, 3), (3, 2)]:
        sp = GenomeSpace(d, l)
        x = rng.normal(size=sp.n)
        ref = spectral.CharacterTable(sp).matrix() @ x / np.sqrt(sp.n)
        got = spectral.group_dft(x, sp)
        if fault:
            got = got * 1.001
        worst = max(worst, float(np.max(np.abs(got - ref))))
    return worst < 1e-12, f"max diff {worst:.1e}"


def _check_jacobian(fault):
    sp = GenomeSpace(2, 2)
    model = mixing.MixingHeuristic(sp, mixing.FitnessPipeline(mixing.onemax()),
                                   mixing.CrossoverSpec.uniform(sp), mixing.MutationSpec(0.05))
    p = np.array([0.1, 0.2, 0.3, 0.4])
    Ja = dynamics.jacobian_at(model, p, "analytic")
    Jf = dynamics.jacobian_at(model, p, "fd")
    if fault:
        Ja = Ja + 1e-3
    err = float(np.max(np.abs(Ja - Jf)))
    return err < 1e-6, f"max diff {err:.1e}"


def _check_orbits(fault):
    sp = GenomeSpace(2, 4)
    g = groups.close_group([groups.rotation(sp)], n=sp.n)
    bad = 0
    for z in range(sp.n):
        lhs = len(groups.orbit_of(g, z)) * len(groups.stabilizer_of(g, z))
        bad += int(lhs != g.order + (1 if fault else 0))
    return bad == 0, f"{bad} violations"


CHECKS = {
    "arithmetic": ("digit arithmetic vs divmod oracle", _check_arithmetic),
    "mix": ("mixing vs triple-sum oracle", _check_mix),
    "eigen": ("mutation spectrum vs closed form", _check_eigen),
    "dft": ("group DFT vs character matrix", _check_dft),
    "jacobian": ("analytic vs finite-difference Jacobian", _check_jacobian),
    "orbits": ("orbit-stabilizer identity", _check_orbits),
}


def verify(inject_fault=None, stream=None) -> bool:
    stream = stream or sys.stdout
    if inject_fault is not None and inject_fault not in CHECKS:
        raise UsageError(f"unknown fault {inject_fault!r}; choose from {', '.join(CHECKS)}")
    width = max(len(desc) for desc, _ in CHECKS.values())
    all_ok = True
    for name, (desc, fn) in CHECKS.items():
        ok, detail = fn(name == inject_fault)
        all_ok &= ok
        print(f"{desc:<{width}}  {'PASS' if ok else 'FAIL'}  {detail}", file=stream)
    return all_ok


# -- entry point ------------------------------------------------------------------

def _diagnostic(exc) -> str:
    msg = " ".join(str(exc).split())
    field = getattr(exc, "field", None)
    if field and not msg.startswith(field):
        msg = f"{field}: {msg}"
    return msg


def _parser():
    p = argparse.ArgumentParser(prog="eagroup", description="Group-theoretic EA experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="execute an experiment config")
    r.add_argument("config")
    r.add_argument("--out", default=None, help="output root (overrides OUT_DIR)")
    d = sub.add_parser("describe", help="print the schema and an example for a kind")
    d.add_argument("kind")
    v = sub.add_parser("verify", help="run the built-in oracle checks")
    v.add_argument("--inject-fault", default=None, help=argparse.SUPPRESS)
    return p


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "describe":
            if args.kind not in cfgmod.KINDS:
                raise UsageError(f"unknown kind {args.kind!r}; choose from {', '.join(cfgmod.KINDS)}")
            print(_dump({"schema": cfgmod.schema_for(args.kind), "example": cfgmod.EXAMPLES[args.kind]}),
                  end="")
            return EXIT_OK
        if args.command == "verify":
            return EXIT_OK if verify(args.inject_fault) else 1
        try:
            with open(args.config) as fh:
                config = json.load(fh)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc.strerror}: {args.config}")
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON at line {exc.lineno}: {exc.msg}", field="(root)")
        run_dir = run_config(config, args.out)
        print(run_dir)
        return EXIT_OK
    except (ValidationError, UsageError) as exc:
        print(f"error: {_diagnostic(exc)}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, ResourceError, SearchFailure) as exc:
        print(f"error: {_diagnostic(exc)}", file=sys.stderr)
        return EXIT_NUMERIC
    except EAGroupError as exc:
        print(f"error: {_diagnostic(exc)}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
