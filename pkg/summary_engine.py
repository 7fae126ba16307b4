"""
Summary Engine
Generates short natural language summaries for derivation, flow and verification runs.
"""

import math


def generate_derivation_summary(report):
    """
    Summarises a derivation report (columns step, title, verdict).
    Returns empty string for an empty report.
    """
    if report is None or report.empty:
        return ""

    passed = int((report["verdict"] == "PASS").sum())
    total = len(report)
    summary_parts = [f"Derivation: {passed} of {total} steps PASS."]
    failed = report[report["verdict"] != "PASS"]
    if failed.empty:
        final = report.iloc[-1]["expected"]
        summary_parts.append(f"All steps agree with the closed forms; final quantity h = {final}.")
    else:
        titles = ", ".join(f"{row.step} ({row.title})" for row in failed.itertuples())
        summary_parts.append(f"Failed steps: {titles}.")
    return " ".join(summary_parts)


def generate_conditions_summary(params, abc_report, phi_report=None):
    """One sentence on feasibility of a single (a, b, c) choice, naming violated bounds."""
    label = f"(a, b, c) = ({params.a}, {params.b}, {params.c})"
    failed = abc_report.failed() + (phi_report.failed() if phi_report else [])
    if not failed:
        return f"{label} satisfies every condition."
    reasons = "; ".join(f"{cond.name}: {cond.detail}" if cond.detail else cond.name for cond in failed)
    return f"{label} is infeasible. Violated: {reasons}."


def generate_flow_summary(summary):
    """
    Natural language summary of a flow run from FlowTrace.summary().
    Returns empty string if the run has no snapshots.
    """
    if not summary:
        return ""

    summary_parts = [
        f"Flow '{summary['name']}' ran {summary['steps']} steps to t = {summary['t_end']:.6g} "
        f"({summary['snapshots']} snapshots, stop reason: {summary['stop_reason']})."
    ]

    rate = summary.get("area_rate", float("nan"))
    if not math.isnan(rate):
        rel = abs(rate + 2 * math.pi) / (2 * math.pi)
        verdict = "matches" if rel <= 0.01 else "deviates from"
        summary_parts.append(f"Area rate {rate:.6g} {verdict} -2 pi (relative error {rel:.2e}).")

    summary_parts.append(
        f"Curvature stayed in [{summary['min_kappa']:.6g}, {summary['max_kappa']:.6g}]; "
        f"final length {summary['length_final']:.6g}, isoperimetric ratio {summary['isoperimetric_final']:.6g}.")

    if summary["violations"]:
        summary_parts.append(f"WARNING: {summary['violations']} invariant violation(s) recorded.")
    return " ".join(summary_parts)


def generate_verification_summary(record, tolerance, time_tolerance=None):
    """
    Summary of HarnackDiagnostics.summary() against the pass tolerance.
    The time-difference gap is reported against time_tolerance when given;
    it depends on the snapshot spacing and does not decide the verdict.
    """
    if not record:
        return ""

    global_min = record["global_min_h"]
    summary_parts = [
        f"h (eps = {record['epsilon']:g}) over {record['snapshots']} snapshot(s): global min {global_min:.6g} "
        f"at t = {record['global_min_t']:.6g}, point {record['global_min_index']}."
    ]
    if global_min >= 0:
        summary_parts.append("The quantity is non-negative everywhere.")
    elif global_min >= -tolerance:
        summary_parts.append(f"Negative excursion {global_min:.3g} is within the tolerance {tolerance:g}.")
    else:
        summary_parts.append(f"FAIL: global min below -{tolerance:g}.")

    summary_parts.append(f"Spatial equivalence gap {record['spatial_gap']:.2e}; "
                         f"stencil agreement {record['stencil_agreement']:.2e}.")
    if record["time_path"]:
        gap = record["time_gap"]
        if time_tolerance is None:
            summary_parts.append(f"Time-difference gap {gap:.2e}.")
        elif gap <= time_tolerance:
            summary_parts.append(f"Time-difference gap {gap:.2e} is within {time_tolerance:g}.")
        else:
            summary_parts.append(f"Time-difference gap {gap:.2e} is above {time_tolerance:g}; "
                                 "snapshots are too far apart in time.")
    else:
        summary_parts.append("Time-difference form unavailable (single snapshot).")
    return " ".join(summary_parts)
