"""
Suggestive Annotation Workbench: Home
======================================

Landing page. Navigation is handled by app.py via st.navigation().
"""

import streamlit as st

from theme import INK, MUTED, find_logs, inject_theme, render_divider, render_footer, render_header, run_dir_picker

st.set_page_config(page_title="Annotation Workbench", page_icon="\U0001F9E0", layout="centered")

inject_theme()
render_header("Suggestive Annotation Workbench", "Active learning for brain tissue segmentation")

st.markdown(
    f'<p style="color:{MUTED}; text-align:center;">'
    "Which case should an expert annotate next, and how much of its contour "
    "does the current model already draw?</p>",
    unsafe_allow_html=True,
)
render_divider()

run_dir = run_dir_picker()
logs = find_logs(run_dir)

if not logs:
    st.info(
        f"No simulation logs under `{run_dir}`. Generate a benchmark and run a comparison:\n\n"
        "```\npython main.py phantom --out data --seed 0 --labeled 2 --pool 18 --test 10\n"
        "python main.py simulate --manifest data/manifest.json --config sim.json --out runs\n```"
    )
else:
    st.markdown(f'<h4 style="color:{INK};">Runs found</h4>', unsafe_allow_html=True)
    st.dataframe(
        [{"run": name, "log": str(path)} for name, path in logs.items()],
        use_container_width=True,
        hide_index=True,
    )

col1, col2, col3 = st.columns(3)
with col1:
    if st.button("Simulation log", use_container_width=True, type="primary"):
        st.switch_page("pages/1_Simulation_Log.py")
with col2:
    if st.button("Compare strategies", use_container_width=True):
        st.switch_page("pages/2_Strategy_Comparison.py")
with col3:
    if st.button("Review effort", use_container_width=True):
        st.switch_page("pages/3_Effort_Review.py")

render_footer()
