"""
Strategy Comparison: BvSB against random query on the same pool.
"""

import pandas as pd
import plotly.express as px
import streamlit as st

from active_loop import COMPARISON_COLUMNS, dice_curve_area
from benchmark import DEFAULT_TARGET
from log_tables import strategy_summary
from theme import STRATEGY_COLORS, find_logs, inject_theme, load_log, render_footer, render_header, run_dir_picker

st.set_page_config(page_title="Strategy Comparison", page_icon="⚖️", layout="wide")
inject_theme()
render_header("Strategy Comparison", "Suggestive annotation vs random query")

run_dir = run_dir_picker()
comparison_path = run_dir / "comparison.csv"
if not comparison_path.is_file():
    st.info(
        f"No `comparison.csv` in `{run_dir}`. Run `simulate` with "
        '`"strategy": ["bvsb", "random"]` in the config.'
    )
    st.stop()

table = pd.read_csv(comparison_path)
if list(table.columns) != COMPARISON_COLUMNS:
    st.error(f"{comparison_path} does not have the columns {COMPARISON_COLUMNS}.")
    st.stop()

# ─────────────────────────────────────────────────────────────────
# Curves
# ─────────────────────────────────────────────────────────────────

long = table.melt(id_vars="iteration", var_name="strategy", value_name="mean_dice")
long["strategy"] = long["strategy"].str.removesuffix("_mean_dice")
fig = px.line(
    long,
    x="iteration",
    y="mean_dice",
    color="strategy",
    markers=True,
    color_discrete_map=STRATEGY_COLORS,
    title="Mean foreground test Dice vs number of queries",
)
target = st.slider("Target mean Dice", 0.5, 1.0, DEFAULT_TARGET, 0.01)
fig.add_hline(y=target, line_dash="dot", line_color="#8A8F98")
st.plotly_chart(fig, use_container_width=True)

bvsb_area = dice_curve_area(table["bvsb_mean_dice"].tolist())
random_area = dice_curve_area(table["random_mean_dice"].tolist())
c1, c2 = st.columns(2)
c1.metric("Area under BvSB curve", f"{bvsb_area:.3f}", delta=f"{bvsb_area - random_area:+.3f} vs random")
c2.metric("Area under random curve", f"{random_area:.3f}")

# ─────────────────────────────────────────────────────────────────
# Per-run summary
# ─────────────────────────────────────────────────────────────────

logs = [load_log(path) for path in find_logs(run_dir).values()]
logs = [log for log in logs if log is not None]
if logs:
    st.markdown("### Runs")
    st.dataframe(strategy_summary(logs, target), use_container_width=True, hide_index=True)

render_footer()
