"""Command-line front end.

Exit codes: 0 success, 1 validation or requirement failure, 2 usage error
or infeasible input.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import codec
from .authority import materialize
from .planner import PlanningError, Schedule, plan_schedule, table1_minimums, validate_schedule
from .simulator import PaymentPolicy, Scenario, ScenarioError, ScheduleRejected, run
from .timeline import render_svg, render_text
from .types import Role

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_FIELD_ALIASES = {"ramp": "ramp_up", "ramp_up": "ramp_up", "active": "active", "passive": "passive"}


class UsageError(Exception):
    pass


def _role(name: str) -> Role:
    for role in Role:
        if name.lower() in (role.value.lower(), role.name.lower()):
            return role
    raise UsageError(f"unknown role {name!r}; expected one of {', '.join(r.value for r in Role)}")


def parse_override(text: str, u: int) -> tuple[Role, str, int]:
    """``ROLE.field=N`` or ``ROLE.field=Nu`` (N multiples of u)."""
    try:
        lhs, rhs = text.split("=", 1)
        role_name, field_name = lhs.rsplit(".", 1)
    except ValueError:
        raise UsageError(f"override {text!r} must look like ROLE.field=VALUE") from None
    field = _FIELD_ALIASES.get(field_name.lower())
    if field is None:
        raise UsageError(f"unknown phase {field_name!r} in override {text!r}")
    rhs = rhs.strip()
    try:
        value = int(rhs[:-1]) * u if rhs.endswith("u") else int(rhs)
    except ValueError:
        raise UsageError(f"override value {rhs!r} is not an integer") from None
    if value < 0:
        raise UsageError(f"override value {rhs!r} is negative")
    return _role(role_name), field, value


def _write(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _load_schedule(path: str) -> Schedule:
    try:
        return Schedule.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    except (ValueError, KeyError, TypeError, OverflowError) as exc:
        raise UsageError(f"{path}: not a valid schedule: {exc}") from None


def cmd_plan(args) -> int:
    try:
        profile = table1_minimums(args.u)
        for text in args.override:
            role, field, value = parse_override(text, args.u)
            profile = profile.with_bounds(role, **{field: value})
        schedule = plan_schedule(args.u, args.horizon, profile, first_root_active=args.first_root_active)
    except PlanningError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _write(schedule.dumps(), args.output)
    return EXIT_OK


def cmd_validate(args) -> int:
    schedule = _load_schedule(args.schedule)
    violations = validate_schedule(schedule)
    if not violations:
        print(f"{args.schedule}: no violations")
        return EXIT_OK
    print(json.dumps([v.to_dict() for v in violations], indent=2))
    for v in violations:
        print(v, file=sys.stderr)
    return EXIT_FAIL


def cmd_simulate(args) -> int:
    try:
        scenario = Scenario.load(args.scenario)
    except OSError as exc:
        raise UsageError(f"cannot read {args.scenario}: {exc}") from None
    except ScenarioError as exc:
        raise UsageError(str(exc)) from None
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.allow_invalid:
        changes["strict"] = False
    if args.stride is not None or args.exhaustive:
        base = scenario.payments or PaymentPolicy()
        stride = args.stride if args.stride is not None else base.stride
        changes["payments"] = PaymentPolicy(stride, None if args.exhaustive else base.max_pairs)
    scenario = replace(scenario, **changes)
    try:
        report = run(scenario)
    except ScenarioError as exc:
        raise UsageError(str(exc)) from None
    except ScheduleRejected as exc:
        print("simulation refused: schedule fails validation", file=sys.stderr)
        print(json.dumps([v.to_dict() for v in exc.violations], indent=2))
        return EXIT_FAIL
    if args.output:
        Path(args.output).write_text(report.dumps())
    print(report.summary())
    return EXIT_OK if report.all_passed else EXIT_FAIL


def cmd_timeline(args) -> int:
    schedule = _load_schedule(args.schedule)
    if args.format == "text":
        if args.bucket < 1:
            raise UsageError("--bucket must be >= 1")
        text = render_text(schedule, args.bucket)
    else:
        text = render_svg(schedule)
    _write(text, args.output)
    return EXIT_OK


def _field_table(cert) -> str:
    rows = [
        ("serial", cert.serial),
        ("role", f"{cert.role.value} (0x{cert.role.code:02x})"),
        ("holder", cert.holder_ref),
        ("issuer", cert.issuer_ref),
        ("public key", f"alg {cert.public_key.algorithm_id} {cert.public_key.key.hex()}"),
        ("verify from", cert.verify_from),
        ("issue from", cert.issue_from),
        ("issue until", cert.issue_until),
        ("verify until", cert.verify_until),
        ("signature", f"alg {cert.signature.algorithm_id} {cert.signature.value.hex()}"),
    ]
    return "\n".join(f"{k:<13} {v}" for k, v in rows)


def cmd_inspect(args) -> int:
    try:
        data = Path(args.certificate).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {args.certificate}: {exc}") from None
    try:
        cert = codec.decode(data)
    except codec.MalformedCertificate as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(codec.hexdump(data))
        return EXIT_FAIL
    print(_field_table(cert))
    print()
    print(codec.hexdump(data))
    if codec.encode(cert) != data:
        print("warning: re-encoding differs from input", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_export_cert(args) -> int:
    schedule = _load_schedule(args.schedule)
    state = materialize(schedule, manufacturers=(args.manufacturer,), seed=args.seed, check=False)
    role = _role(args.role)
    try:
        cred = state.credential(role, args.index, args.manufacturer)
    except KeyError:
        raise UsageError(f"schedule has no {role.value} generation {args.index}") from None
    Path(args.output).write_bytes(codec.encode(cred.certificate))
    print(f"wrote {cred.certificate.ref} to {args.output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cbdc-pki", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="plan a rollover schedule")
    p.add_argument("--u", type=int, default=12, help="ticks per base unit u (default 12)")
    p.add_argument("--horizon", type=int, required=True, help="ticks to cover")
    p.add_argument("--first-root-active", type=int, default=3, help="first Root active phase, in u")
    p.add_argument(
        "--override", action="append", default=[], metavar="ROLE.PHASE=N[u]",
        help="raise or lower one planning bound, e.g. ManufacturerCA.passive=2u",
    )
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("validate", help="check a schedule against the rollover constraints")
    p.add_argument("schedule")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="run a scenario and check requirements R1-R5")
    p.add_argument("scenario")
    p.add_argument("--stride", type=int, help="authenticate alive pairs every N ticks")
    p.add_argument("--exhaustive", action="store_true", help="authenticate every alive pair (no sampling cap)")
    p.add_argument("--seed", type=int)
    p.add_argument("--allow-invalid", action="store_true", help="simulate even if the schedule fails validation")
    p.add_argument("-o", "--output", help="write the JSON report here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("timeline", help="render a schedule")
    p.add_argument("schedule")
    p.add_argument("--format", choices=("text", "vector", "svg"), default="text")
    p.add_argument("--bucket", type=int, default=1, help="ticks per character in text mode")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_timeline)

    p = sub.add_parser("inspect", help="decode a certificate file")
    p.add_argument("certificate")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("export-cert", help="write one generation certificate of a schedule")
    p.add_argument("schedule")
    p.add_argument("--role", required=True)
    p.add_argument("--index", type=int, default=1)
    p.add_argument("--manufacturer", default="mfr")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_export_cert)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "stride", None) is not None and args.stride < 1:
        print("error: --stride must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
