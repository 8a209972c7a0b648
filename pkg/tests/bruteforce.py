"""Direct sweep over every tick and every alive card, no event queue.

Used as an independent oracle for the simulator's requirement verdicts on
small schedules. Cards are made by every manufacturer at every tick and all
alive pairs authenticate every ``stride`` ticks.
"""

from __future__ import annotations

import itertools

from cbdc_pki.authority import EMPTY_REGISTRY, materialize, verify_chain
from cbdc_pki.planner import Schedule
from cbdc_pki.types import Role

SIGNERS = (Role.CENTRAL_REGISTER, Role.TIMESTAMP_SERVICE)


def _active(gens, t):
    # newest generation with issue_from <= t < issue_until, or the passive-free edge
    hits = [g for g in gens if g.issue_from <= t < g.issue_until or (g.plan.passive == 0 and t == g.verify_until)]
    return max(hits, key=lambda g: g.issue_from) if hits else None


def _exists(certs, t):
    return {c for c in certs if c.verify_from <= t <= c.verify_until}


def sweep(schedule: Schedule, manufacturers=("m1", "m2"), stride: int = 3) -> dict[str, bool]:
    u, horizon = schedule.u, schedule.horizon
    state = materialize(schedule, manufacturers=manufacturers, check=False)
    cert_of = {}
    for (role, index, name), cred in state.credentials.items():
        cert_of[(role, index, name)] = cred.certificate
    pinnable = {r: [c for (role, _, _), c in cert_of.items() if role is r] for r in (Role.ROOT_CA, *SIGNERS)}
    ok = dict.fromkeys(("R1", "R2", "R3", "R4", "R5"), True)

    def active_cert(role, t):
        g = _active(schedule.generations(role), t)
        return None if g is None else cert_of[(role, g.index, "")]

    cards = []  # (made, eol, chain, pins)
    for t in range(horizon):
        for name in manufacturers:
            gen = _active(schedule.generations(Role.MANUFACTURER_CA), t)
            if gen is None:
                ok["R5"] = False
                continue
            ee = state.issue_end_entity(Role.SMARTCARD_EE, f"c{t}-{name}", t, manufacturer=name, enforce_ancestors=False)
            chain = ee.chain[:3]
            pins = set()
            for role in (Role.ROOT_CA, *SIGNERS):
                pins |= _exists(pinnable[role], t)
            cards.append((t, ee.certificate.verify_until, chain, pins))

            # R5: everything the card needs was already around when the generation started
            kit = {chain[1], chain[2]}
            for role in (Role.ROOT_CA, *SIGNERS):
                kit |= _exists(pinnable[role], gen.start)
            if not pins <= kit:
                ok["R5"] = False

            # R2: the current Root, Central Register and Timestamp Service are pinned
            for role in (Role.ROOT_CA, *SIGNERS):
                cur = active_cert(role, t)
                if cur is None or cur not in pins:
                    ok["R2"] = False

    # R1: own root plus every root, register and timestamp signer the card will meet
    for made, eol, chain, pins in cards:
        roots = {c for c in pins if c.role is Role.ROOT_CA}
        if not any(r.holder_ref == chain[-1].issuer_ref for r in roots):
            ok["R1"] = False
        last = min(eol, horizon - 1)
        for tau in range(max(0, made - u), last + 1):
            cur = active_cert(Role.ROOT_CA, tau)
            if cur is None or cur not in pins:
                ok["R1"] = False
        for tau in range(made, last + 1):
            for role in SIGNERS:
                cur = active_cert(role, tau)
                if cur is None or cur not in pins:
                    ok["R1"] = False

    # R3: every alive card at every tick
    for tau in range(horizon):
        alive = [c for c in cards if c[0] <= tau <= c[1]]
        for made, eol, chain, pins in alive:
            roots = [c for c in pins if c.role is Role.ROOT_CA]
            if not verify_chain(chain, roots, tau, EMPTY_REGISTRY):
                ok["R3"] = False
            for role in SIGNERS:
                cur = active_cert(role, tau)
                if cur is None or cur not in pins:
                    ok["R3"] = False
        if tau % stride == 0:
            for a, b in itertools.combinations(alive, 2):
                for me, other in ((a, b), (b, a)):
                    roots = [c for c in me[3] if c.role is Role.ROOT_CA]
                    if not verify_chain(other[2], roots, tau, EMPTY_REGISTRY):
                        ok["R3"] = False

    # R4: a Manufacturer CA certificate issued at t stays verifiable for its life
    validity = 2 * u
    for t in range(horizon):
        hw = _active(schedule.generations(Role.HARDWARE_CA), t)
        if hw is None:
            ok["R4"] = False
            continue
        root = schedule.generation(Role.ROOT_CA, hw.parent_index)
        end = min(t + validity, horizon - 1)
        if end > hw.verify_until or end > root.verify_until:
            ok["R4"] = False

    return ok
