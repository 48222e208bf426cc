"""
Simulation Log: per-class test Dice over the queries of one run, the pool
scores at every iteration, and the queried cases.
"""

import plotly.express as px
import streamlit as st

from log_tables import candidate_scores_frame, dice_curve_frame, iterations_frame
from tensor_io import CLASS_NAMES
from theme import CLASS_COLORS, find_logs, inject_theme, load_log, render_footer, render_header, run_dir_picker

# ─────────────────────────────────────────────────────────────────
# Page config
# ─────────────────────────────────────────────────────────────────

st.set_page_config(page_title="Simulation Log", page_icon="\U0001F4C8", layout="wide")
inject_theme()
render_header("Simulation Log", "Test Dice and pool uncertainty per query")

run_dir = run_dir_picker()
logs = find_logs(run_dir)
if not logs:
    st.info(f"No simulation logs under `{run_dir}`.")
    st.stop()

choice = st.selectbox("Run", list(logs))
log = load_log(logs[choice])
if log is None:
    st.error(f"{logs[choice]} is not a readable simulation log.")
    st.stop()

# ── Headline numbers ──
curve = log.mean_dice_curve()
c1, c2, c3, c4 = st.columns(4)
c1.metric("Strategy", log.config.strategy)
c2.metric("Queries", len(log.records))
c3.metric("Mean Dice", f"{curve[-1]:.4f}", delta=f"{curve[-1] - curve[0]:+.4f}")
c4.metric("Stopped on", log.stop_reason.replace("_", " "))

# ─────────────────────────────────────────────────────────────────
# Dice curves
# ─────────────────────────────────────────────────────────────────

dice = dice_curve_frame(log)
long = dice.melt(
    id_vars=["iteration", "labeled_count"],
    value_vars=[f"dice_{name}" for name in CLASS_NAMES] + ["mean_foreground"],
    var_name="class",
    value_name="dice",
)
long["class"] = long["class"].str.removeprefix("dice_")
fig = px.line(
    long,
    x="iteration",
    y="dice",
    color="class",
    markers=True,
    color_discrete_map={**CLASS_COLORS, "mean_foreground": "#1C2E4A"},
    hover_data=["labeled_count"],
    title="Test Dice after each query",
)
fig.update_yaxes(range=[0, 1.02])
st.plotly_chart(fig, use_container_width=True)

# ─────────────────────────────────────────────────────────────────
# Pool scores
# ─────────────────────────────────────────────────────────────────

scores = candidate_scores_frame(log)
if scores.empty:
    st.info("No queries were made in this run.")
else:
    fig_scores = px.scatter(
        scores,
        x="iteration",
        y="avg_bvsb",
        color="selected",
        hover_data=["case_id"],
        color_discrete_map={True: "#D67A24", False: "#B0B4BA"},
        title="Average BvSB of every pool case (lower is more uncertain)",
    )
    st.plotly_chart(fig_scores, use_container_width=True)

    st.markdown("### Queried cases")
    st.dataframe(iterations_frame(log), use_container_width=True, hide_index=True)

render_footer()
