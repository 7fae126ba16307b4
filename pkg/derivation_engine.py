import logging
import re

import graphviz
import networkx as nx
import pandas as pd
import sympy as sp

import diffpoly_engine as dp
import harnack_engine as hk

log = logging.getLogger(__name__)

PASS = "PASS"
FAIL = "FAIL"

# Dependencies are step ids separated by semicolons: "1;2"
DEPENDENCY_REGEX = re.compile(r"^(?P<id>\d+)$")

REPORT_COLUMNS = ["step", "title", "expected", "computed", "verdict"]


def parse_dependency_string(dep_str):
    """
    Parses a dependency string like '3' or '1;2' into a list of step ids.
    Empty / NaN gives []. Raises ValueError on anything else.
    """
    if not isinstance(dep_str, str) or not dep_str.strip():
        return []
    deps = []
    for part in [p.strip() for p in dep_str.split(";") if p.strip()]:
        match = DEPENDENCY_REGEX.match(part)
        if not match:
            raise ValueError(f"Malformed dependency: '{part}'")
        deps.append(int(match.group("id")))
    return deps


def build_step_graph_and_validate(df):
    """
    Builds a DiGraph from a steps table (step_id, title, depends_on).
    Validates syntax, self-dependencies, missing references and cycles.

    Returns:
    - G: the networkx graph
    - validation_results: dict step_id -> "OK" or "ERROR: ..."
    """
    G = nx.DiGraph()
    validation_results = {}

    valid_ids = set()
    for _, row in df.iterrows():
        try:
            step_id = int(row["step_id"])
        except (ValueError, TypeError):
            continue
        valid_ids.add(step_id)
        G.add_node(step_id, label=row.get("title", str(step_id)))

    for _, row in df.iterrows():
        try:
            step_id = int(row["step_id"])
        except (ValueError, TypeError):
            validation_results["UNKNOWN"] = "ERROR: Invalid step ID"
            continue

        status = "OK"
        deps_str = row.get("depends_on")
        if pd.isna(deps_str) or str(deps_str).strip() == "":
            validation_results[step_id] = status
            continue

        try:
            for dep in parse_dependency_string(str(deps_str)):
                if dep == step_id:
                    status = f"ERROR: Self-dependency on {dep}"
                    break
                if dep not in valid_ids:
                    status = f"ERROR: Missing step ID {dep}"
                    break
                G.add_edge(dep, step_id)
        except ValueError as e:
            status = f"ERROR: {e}"
        validation_results[step_id] = status

    for cycle in nx.simple_cycles(G):
        cycle_str = "->".join(map(str, cycle))
        for node in cycle:
            if validation_results.get(node, "OK") == "OK":
                validation_results[node] = f"ERROR: Cycle detected ({cycle_str})"
            else:
                validation_results[node] += "; Cycle detected"

    return G, validation_results


def to_dot(G, results=None):
    """DOT source of the step graph; failed steps are drawn red."""
    dot = graphviz.Digraph("derivation", graph_attr={"rankdir": "TB"})
    results = results or {}
    for node in sorted(G.nodes):
        color = "red" if results.get(node) == FAIL else "black"
        dot.node(str(node), f"{node}. {G.nodes[node].get('label', node)}", color=color)
    for u, v in sorted(G.edges):
        dot.edge(str(u), str(v))
    return dot.source


# --- Derivation steps ---

def _same(p, q):
    return dp.sub(p, q).is_zero()


def _step_dt_uss():
    computed = dp.d_t(dp.U_SS)
    grouped = (dp.U_SSSS + dp.d_s(dp.d_s(dp.U_S ** 2))
               + dp.scale(dp.E * dp.U_SS, 4) + dp.scale(dp.E * dp.U_S ** 2, 6))
    expanded = (dp.U_SSSS + dp.scale(dp.U_S * dp.U_SSS, 2) + dp.scale(dp.U_SS ** 2, 2)
                + dp.scale(dp.E * dp.U_SS, 4) + dp.scale(dp.E * dp.U_S ** 2, 6))
    ok = _same(computed, grouped) and _same(computed, expanded)
    return dp.serialize(expanded), dp.serialize(computed), ok


def _step_dt_us2():
    computed = dp.d_t(dp.U_S ** 2)
    expanded = (dp.scale(dp.U_S * dp.U_SSS, 2) + dp.scale(dp.U_S ** 2 * dp.U_SS, 4)
                + dp.scale(dp.E * dp.U_S ** 2, 6))
    # (u_s^2)_ss - 2 u_ss^2 + 4 u_s^2 u_ss + 6 E u_s^2
    grouped = (dp.d_s(dp.d_s(dp.U_S ** 2)) - dp.scale(dp.U_SS ** 2, 2)
               + dp.scale(dp.U_S ** 2 * dp.U_SS, 4) + dp.scale(dp.E * dp.U_S ** 2, 6))
    ok = _same(computed, expanded) and _same(computed, grouped)
    return dp.serialize(expanded), dp.serialize(computed), ok


def _step_remainder():
    params = hk.AnsatzParams.symbolic()
    computed = hk.symbolic_remainder()
    expected = hk.expected_remainder(params)
    return dp.serialize(expected), dp.serialize(computed), _same(computed, expected)


def _step_quadform():
    params = hk.AnsatzParams.symbolic()
    qf = hk.symbolic_quadform()
    expected = hk.expected_quadform(params)
    computed = qf.coefficients()
    ok = all(sp.simplify(computed[name] - expected[name]) == 0 for name in expected)
    ok = ok and _same(qf.residual, hk.expected_residual())
    ok = ok and _same(hk.unsubstitute(qf, params), hk.symbolic_remainder())

    def fmt(d):
        return "; ".join(f"{k}={sp.sstr(sp.factor(v))}" for k, v in d.items())
    return fmt(expected), fmt(computed), ok


def _step_c_interval():
    a, b = hk.A_SYM, hk.B_SYM
    bounds = hk.condition_bounds()
    lower = a ** 2 / (a - b)
    upper = (3 * a + b) * a ** 2 / (3 * a ** 2 - 2 * a * b + 2 * b ** 2)
    ok = (sp.simplify(bounds.lower - lower) == 0 and sp.simplify(bounds.upper - upper) == 0
          and bounds.cxx_roots[0] == 0 and sp.simplify(bounds.cxx_roots[-1] - lower) == 0)
    expected = f"{sp.sstr(lower)} <= c <= {sp.sstr(upper)}"
    computed = f"{sp.sstr(bounds.lower)} <= c <= {sp.sstr(bounds.upper)}"
    return expected, computed, ok


def _step_phi():
    summary = hk.summary_conditions()
    square_gap = hk.cauchy_schwarz_gap(hk.AnsatzParams.symbolic())
    ok = bool(summary["alpha_matches"]) and bool(summary["beta_matches"]) and square_gap == 0
    expected = "alpha >= 1/A; beta >= (6+4B)/A"
    computed = f"alpha >= {sp.sstr(summary['alpha_min'])}; beta >= {sp.sstr(summary['beta_min'])}"
    return expected, computed, ok


def _step_collapse():
    solution = hk.solve_family()
    a = hk.A_SYM
    expected = {"b": 0, "c": a, "beta": 0, "alpha": a / 2 + hk.EPS_SYM}
    constraints = solution.constraints
    ok = all(sp.simplify(constraints[k] - v) == 0 for k, v in expected.items())
    ok = ok and solution.grid_feasible == 0
    computed = ", ".join(f"{k}={sp.sstr(v)}" for k, v in constraints.items())
    computed += f"; lower - upper numerator {sp.sstr(solution.emptiness_numerator)}"
    return ", ".join(f"{k}={sp.sstr(v)}" for k, v in expected.items()), computed, ok


def _step_final(epsilon):
    solution = hk.solve_family()
    check = hk.verify_specialized_remainder(epsilon)
    expected = "u_ss + E + (epsilon + 1/2)/t"
    computed = solution.rescaled.pretty()
    ok = computed == expected and check.holds
    computed += f"; critical value {sp.sstr(check.contradiction)}/t^2 at eps={epsilon}"
    return expected, computed, ok


DERIVATION_STEPS = [
    {"step_id": 1, "title": "(u_ss)_t", "depends_on": ""},
    {"step_id": 2, "title": "(u_s^2)_t", "depends_on": ""},
    {"step_id": 3, "title": "h_t - h_ss - 2 u_s h_s - 4 E h", "depends_on": "1;2"},
    {"step_id": 4, "title": "quadratic form at the critical point", "depends_on": "3"},
    {"step_id": 5, "title": "interval for c", "depends_on": "4"},
    {"step_id": 6, "title": "conditions on phi", "depends_on": "4"},
    {"step_id": 7, "title": "collapse at b = 0", "depends_on": "5;6"},
    {"step_id": 8, "title": "final Harnack quantity", "depends_on": "7"},
]

STEP_FUNCTIONS = {
    1: _step_dt_uss,
    2: _step_dt_us2,
    3: _step_remainder,
    4: _step_quadform,
    5: _step_c_interval,
    6: _step_phi,
    7: _step_collapse,
}


def run_derivation(epsilon=sp.Rational(1, 100), steps=None):
    """
    Validates the step graph and runs each step in topological order.
    A step whose dependency failed is reported FAIL without running.
    Returns (report DataFrame, graph, verdicts by step id).
    """
    steps_df = pd.DataFrame(steps or DERIVATION_STEPS)
    G, validation = build_step_graph_and_validate(steps_df)
    errors = {k: v for k, v in validation.items() if v != "OK"}
    if errors:
        raise ValueError("Invalid derivation graph: " + "; ".join(f"{k}: {v}" for k, v in errors.items()))

    functions = dict(STEP_FUNCTIONS)
    functions[8] = lambda: _step_final(hk.to_exact(epsilon))

    verdicts, rows = {}, []
    for step_id in nx.lexicographical_topological_sort(G):
        title = G.nodes[step_id]["label"]
        failed_deps = [d for d in G.predecessors(step_id) if verdicts.get(d) != PASS]
        if failed_deps:
            expected, computed, ok = "", f"dependency failed: {failed_deps}", False
        else:
            expected, computed, ok = functions[step_id]()
        verdicts[step_id] = PASS if ok else FAIL
        log.info("Step %d (%s): %s", step_id, title, verdicts[step_id])
        rows.append({"step": step_id, "title": title, "expected": expected,
                     "computed": computed, "verdict": verdicts[step_id]})

    report = pd.DataFrame(rows, columns=REPORT_COLUMNS).sort_values("step").reset_index(drop=True)
    return report, G, verdicts
