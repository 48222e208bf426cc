"""
Suggestive Annotation Workbench: results dashboard
===================================================

Run locally:  streamlit run app.py

Navigation router for the multi-page viewer using st.navigation().
Icons use Streamlit's Material icon format: :material/icon_name:
"""

import streamlit as st

pg = st.navigation(
    [
        st.Page(
            "home.py",
            title="Home",
            icon=":material/home:",
            default=True,
        ),
        st.Page(
            "pages/1_Simulation_Log.py",
            title="Simulation Log",
            icon=":material/timeline:",
        ),
        st.Page(
            "pages/2_Strategy_Comparison.py",
            title="Strategy Comparison",
            icon=":material/compare_arrows:",
        ),
        st.Page(
            "pages/3_Effort_Review.py",
            title="Effort Review",
            icon=":material/draw:",
        ),
    ]
)

pg.run()
