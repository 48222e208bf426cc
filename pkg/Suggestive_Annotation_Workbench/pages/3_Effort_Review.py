"""
Effort Review: saved annotation effort per query, and the contour an
annotator would still have to draw for a prediction / ground-truth pair.
"""

from pathlib import Path

import numpy as np
import plotly.express as px
import streamlit as st

from boundary_effort import TISSUE_CLASSES, effort_report, extract_boundary, missing_boundary
from errors import WorkbenchError
from log_tables import effort_summary
from tensor_io import CLASS_NAMES, LabelMap, load_tensor
from theme import CLASS_COLORS, find_logs, inject_theme, load_log, render_footer, render_header, run_dir_picker

st.set_page_config(page_title="Effort Review", page_icon="✏️", layout="wide")
inject_theme()
render_header("Effort Review", "How much of each contour the model already drew")

run_dir = run_dir_picker()
tab_runs, tab_pair = st.tabs(["Saved effort per query", "Contour overlay"])

# ─────────────────────────────────────────────────────────────────
# Saved effort table
# ─────────────────────────────────────────────────────────────────

with tab_runs:
    logs = find_logs(run_dir)
    if not logs:
        st.info(f"No simulation logs under `{run_dir}`.")
    else:
        choice = st.selectbox("Run", list(logs))
        log = load_log(logs[choice])
        if log is None:
            st.error(f"{logs[choice]} is not a readable simulation log.")
        elif not log.records:
            st.info("No queries were made in this run.")
        else:
            summary = effort_summary(log)
            st.dataframe(summary.style.format(precision=2), use_container_width=True, hide_index=True)
            long = summary.drop(columns="mean").melt(id_vars="class", var_name="iteration", value_name="saved_pct")
            fig = px.bar(
                long,
                x="iteration",
                y="saved_pct",
                color="class",
                barmode="group",
                color_discrete_map=CLASS_COLORS,
                title="Saved effort (%) on each queried case",
            )
            fig.update_yaxes(range=[0, 100])
            st.plotly_chart(fig, use_container_width=True)

# ─────────────────────────────────────────────────────────────────
# Missing-boundary overlay
# ─────────────────────────────────────────────────────────────────

with tab_pair:
    col1, col2 = st.columns(2)
    gt_path = col1.text_input("Ground-truth label map (VTF1, 2D)")
    pred_path = col2.text_input("Predicted label map (VTF1, 2D)")
    class_name = st.radio("Class", [CLASS_NAMES[c] for c in TISSUE_CLASSES], horizontal=True)
    tol = st.slider("Tolerance (pixels)", 0, 3, 0)

    if gt_path and pred_path:
        try:
            gt = load_tensor(Path(gt_path), expect=LabelMap)
            pred = load_tensor(Path(pred_path), expect=LabelMap)
            class_id = CLASS_NAMES.index(class_name)
            report = effort_report(gt, pred, tol)
            missing = missing_boundary(gt, pred, class_id, tol)
            drawn = extract_boundary(gt, class_id).mask & ~missing.mask
        except (OSError, WorkbenchError) as exc:
            st.error(str(exc))
        else:
            st.metric(f"Saved effort, {class_name}", f"{report.pct(class_id):.2f} %")
            # 0 elsewhere, 1 covered by the prediction, 2 still to draw
            overlay = np.zeros(gt.dims, dtype=np.uint8)
            overlay[drawn] = 1
            overlay[missing.mask] = 2
            fig = px.imshow(
                overlay,
                color_continuous_scale=[[0, "#FFFFFF"], [0.5, "#3C8DDA"], [1, "#D67A24"]],
                zmin=0,
                zmax=2,
                title="Ground-truth contour: blue already drawn, orange still to annotate",
            )
            fig.update_coloraxes(showscale=False)
            st.plotly_chart(fig, use_container_width=True)
            st.dataframe(report.to_frame(), use_container_width=True, hide_index=True)

render_footer()
