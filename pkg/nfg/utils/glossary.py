# Centralized help text for report codes, used by the CLI summaries.

AUDIT_REASONS = {
    "A1": "HJ residual or gradient/value consistency above tolerance: u is not a solution of the HJ system with p = u'.",
    "A2": "Growth: |u| grows faster than C(1 + |x|) at the ends of the window.",
    "A3": "Jump condition: at a gradient jump the one-sided drifts do not point away from the jump, or value continuity fails.",
}

JUMP_VIOLATIONS = {
    "drift_plus_positive": "Right-side closed-loop drift sum p+/k is positive (points back into the jump).",
    "drift_minus_negative": "Left-side closed-loop drift sum p-/k is negative (points back into the jump).",
    "value_identities": "The one-sided gradients do not give the same Hamiltonian values (u would not be continuous).",
}

TERMINATIONS = {
    "Converged": "Orbit settles at an equilibrium of the rescaled flow.",
    "BlowUp": "|p| reaches the blow-up threshold at finite s; the x-domain extends to infinity with superlinear values.",
    "LeftWindow": "Orbit still moving when the s-budget ran out.",
    "ClosedOrbit": "Orbit returns to its start: a periodic gradient profile.",
    "None": "No termination was recorded.",
}

TRAJECTORY_EVENTS = {
    "HitJumpPoint": "Trajectory reached a gradient jump.",
    "ReachedEquilibrium": "Closed-loop drift vanishes; the state stays put.",
    "Truncated": "Trajectory left the solution window and was stopped.",
}


def describe(code: str) -> str:
    for table in (AUDIT_REASONS, JUMP_VIOLATIONS, TERMINATIONS, TRAJECTORY_EVENTS):
        if code in table:
            return table[code]
    return code
