"""
Streamlit viewer for saddle-point controller experiments.

User workflow:
1. Pick a shipped scenario (or browse a finished run under data/runs)
2. Choose communication mode and seed, then run
3. Inspect regret, fit / T, multiplier disagreement and triggering instants
4. Compare the guarantees against the measured curves
"""
import json
import sys
from pathlib import Path

import pandas as pd
import streamlit as st

# Add parent directory to path
sys.path.append(str(Path(__file__).parent.parent))

from config import RUNS_DIR, SCENARIO_DIR
from scripts.errors import GridMismatch, InfeasibleProgram, ScenarioError, ScenarioValidationError, SimulationAbort
from scripts.metrics import zeno_frame, zeno_report
from scripts.run_experiment import run_mode, solve_oracle
from scripts.scenario import load_scenario


@st.cache_resource(show_spinner=False)
def _load(path: str):
    return load_scenario(path)


@st.cache_data(show_spinner=False)
def _oracle(path: str):
    result, _ = solve_oracle(_load(path), progress=False)
    return result.y_star


def _show_report(report, traj):
    col1, col2, col3, col4 = st.columns(4)
    with col1:
        st.metric("Final regret", f"{report.final_regret:.4g}")
    with col2:
        st.metric("Final fit", f"{report.final_fit:.4g}")
    with col3:
        st.metric("Final fit / T", f"{report.fit_over_time[-1]:.3g}")
    with col4:
        st.metric("Broadcasts", f"{report.broadcasts:,}")

    frame = report.to_frame().set_index("t")
    stride = max(1, len(frame) // 2000)
    st.markdown("**Regret**")
    regret_cols = ["regret"] + [c for c in frame.columns if c.startswith("bound_regret")]
    st.line_chart(frame[regret_cols].iloc[::stride])
    st.markdown("**Fit / T**")
    st.line_chart(frame[["fit_over_t"]].iloc[::stride])
    st.markdown("**Multiplier disagreement h(μ)**")
    st.line_chart(frame[["disagreement"]].iloc[::stride])

    st.markdown("**Guarantees**")
    checks = report.bound_checks()
    st.table(pd.DataFrame({"bound": list(checks), "held": ["✅" if v else "❌" for v in checks.values()]}))

    if traj is not None and traj.mode.value == "event_triggered":
        st.markdown("**Triggering instants**")
        rows = [{"t": t, "agent": i} for i, times in enumerate(traj.trigger_times) for t in times]
        if rows:
            st.scatter_chart(pd.DataFrame(rows), x="t", y="agent")
        else:
            st.info("No agent broadcast after t = 0.")
        st.dataframe(zeno_frame(zeno_report(traj)), use_container_width=True)


def _browse_runs():
    runs = sorted(p.parent for p in RUNS_DIR.glob("*/manifest.json"))
    if not runs:
        st.info(f"No finished runs in {RUNS_DIR}. Use `python scripts/run_experiment.py run` first.")
        return
    choice = st.selectbox("Run directory", runs, format_func=lambda p: p.name)
    with open(choice / "manifest.json", "r", encoding="utf-8") as f:
        manifest = json.load(f)
    st.caption(f"Scenario {manifest['scenario_name']} · hash {manifest['scenario_hash'][:12]} · seed {manifest['seed']}")
    for mode, summary in manifest["summaries"].items():
        with st.expander(f"Summary: {mode}", expanded=True):
            st.json(summary)
    for metrics_csv in sorted(choice.glob("*metrics.csv")):
        frame = pd.read_csv(metrics_csv).set_index("t")
        st.markdown(f"**{metrics_csv.name}**")
        st.line_chart(frame[["regret", "fit_over_t"]].iloc[:: max(1, len(frame) // 2000)])
    if (choice / "comparison.csv").exists():
        st.markdown("**Mode comparison**")
        st.dataframe(pd.read_csv(choice / "comparison.csv"), use_container_width=True)


def main():
    st.set_page_config(
        page_title="Saddle-Point Controller Lab",
        page_icon="🛰️",
        layout="wide"
    )

    st.title("🛰️ Distributed Online Saddle-Point Controller")
    st.markdown("Run a scenario in continuous or event-triggered mode and inspect regret, fit and communication.")

    with st.sidebar:
        st.header("Configuration")
        view = st.radio("View", ["Run a scenario", "Browse finished runs"])
        scenarios = sorted(SCENARIO_DIR.glob("*.json"))
        scenario_path = st.selectbox("Scenario", scenarios, format_func=lambda p: p.stem)
        mode = st.radio("Communication", ["continuous", "event_triggered", "both"])
        seed = st.number_input("Initial-state seed", min_value=0, value=42, step=1)
        st.markdown("---")
        st.markdown("### About")
        st.markdown("Agents with linear dynamics track time-varying costs while sharing one coupled inequality "
                    "constraint. Multipliers reach consensus through a sign-based penalty; the event-triggered "
                    "mode only broadcasts them when a decaying threshold is crossed.")

    if view == "Browse finished runs":
        _browse_runs()
        return

    st.subheader("1. Scenario")
    try:
        spec = _load(str(scenario_path))
    except (ScenarioError, ScenarioValidationError) as e:
        st.error(f"Scenario failed validation: {e}")
        return
    col1, col2, col3, col4 = st.columns(4)
    with col1:
        st.metric("Agents", spec.N)
    with col2:
        st.metric("Constraint rows q", spec.q)
    with col3:
        st.metric("Horizon", f"{spec.horizon:g} s")
    with col4:
        st.metric("K_μ", f"{spec.params.k_mu:.4g}" + (" (auto)" if spec.k_mu_auto else ""))
    with st.expander("View scenario file", expanded=False):
        st.json(spec.to_dict())

    st.subheader("2. Run")
    if st.button("Run experiment", type="primary", key="btn_run"):
        with st.spinner("Solving the clairvoyant benchmark and simulating..."):
            try:
                y_star = _oracle(str(scenario_path))
                modes = ["continuous", "event_triggered"] if mode == "both" else [mode]
                st.session_state["results"] = {
                    m: run_mode(spec, m, y_star, seed=int(seed), progress=False) for m in modes
                }
            except InfeasibleProgram as e:
                st.error(f"No feasible benchmark output: {e}")
            except (SimulationAbort, GridMismatch) as e:
                st.error(f"Run aborted: {e}")
                st.exception(e)

    results = st.session_state.get("results")
    if results:
        st.subheader("3. Results")
        tabs = st.tabs(list(results))
        for tab, (name, (traj, report)) in zip(tabs, results.items()):
            with tab:
                _show_report(report, traj)
        if len(results) == 2:
            cont, trig = results["continuous"][1], results["event_triggered"][1]
            st.success(f"Event-triggered mode used {trig.broadcasts:,} of {cont.broadcasts:,} broadcasts "
                       f"({1 - trig.broadcasts / cont.broadcasts:.1%} saved).")

        if st.button("Clear results", key="btn_clear"):
            st.session_state.pop("results", None)
            st.rerun()

    with st.expander("📖 How to use", expanded=False):
        st.markdown("""
1. **Pick a scenario**: shipped files live in `data/scenarios/`.
2. **Choose a mode**: continuous, event-triggered, or both for a broadcast comparison.
3. **Run**: the clairvoyant benchmark is solved once per scenario and cached under `data/oracle_cache/`.
4. **Read the curves**: dashed bound columns show the guarantees; the table reports whether they held.

**Command line:** `python scripts/run_experiment.py compare data/scenarios/five_agent_benchmark.json`
        """)


if __name__ == "__main__":
    main()
