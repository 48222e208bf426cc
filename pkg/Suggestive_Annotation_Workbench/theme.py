"""
Workbench Theme
================
Shared colours, CSS and page chrome for the results dashboard, plus the
run-directory loader every page uses.
"""

from pathlib import Path
from typing import Optional

from active_loop import LOG_FILE_NAME, SimulationLog
from errors import WorkbenchError
from tensor_io import CLASS_NAMES

# ── Palette ──
INK = "#1C2E4A"
INK_DARK = "#111D30"
ACCENT = "#D67A24"
MUTED = "#8A8F98"
INK_LIGHT = "#EEF2F7"

# One colour per tissue class, background included
CLASS_COLORS = dict(zip(CLASS_NAMES, ("#B0B4BA", "#3C8DDA", "#8E5CC4", "#E8B93A")))
STRATEGY_COLORS = {"bvsb": ACCENT, "random": MUTED}


# ── Global CSS injected into every page ──
GLOBAL_CSS = f"""<style>
.wb-header {{
    background: linear-gradient({INK}, {INK_DARK});
    padding: 1rem 2rem;
    border-radius: 0 0 12px 12px;
    margin: -1rem -1rem 1.5rem -1rem;
    text-align: center;
}}
.wb-header-title {{
    color: white;
    font-weight: 700;
    font-size: 1.8rem;
    margin: 0;
    letter-spacing: 0.02em;
}}
.wb-header-sub {{
    color: {INK_LIGHT};
    font-size: 0.9rem;
    margin-top: 0.2rem;
}}
.wb-divider {{
    height: 3px;
    background: {ACCENT};
    border: none;
    margin: 1rem 0;
    border-radius: 2px;
}}
section[data-testid="stSidebar"] {{
    background: {INK_LIGHT};
    border-right: 2px solid {INK};
}}
[data-testid="stMetricValue"] {{
    color: {INK};
}}
.wb-footer {{
    text-align: center;
    padding: 1rem 0 0.5rem 0;
    font-size: 0.75rem;
    color: {MUTED};
    border-top: 1px solid #e0e0e0;
    margin-top: 2rem;
}}
</style>"""


def inject_theme():
    import streamlit as st
    st.markdown(GLOBAL_CSS, unsafe_allow_html=True)


def render_header(title, subtitle=""):
    import streamlit as st
    sub_html = f'<div class="wb-header-sub">{subtitle}</div>' if subtitle else ""
    st.markdown(
        f'<div class="wb-header"><div class="wb-header-title">{title}</div>{sub_html}</div>',
        unsafe_allow_html=True,
    )


def render_divider():
    import streamlit as st
    st.markdown('<div class="wb-divider"></div>', unsafe_allow_html=True)


def render_footer():
    import streamlit as st
    st.markdown(
        '<div class="wb-footer">Read-only view of simulation outputs. '
        "Produce runs with <code>python main.py simulate</code>.</div>",
        unsafe_allow_html=True,
    )


def find_logs(run_dir: Path) -> dict[str, Path]:
    """simulation_log.json files under `run_dir`, keyed by path relative to it."""
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        return {}
    return {
        (p.parent.relative_to(run_dir).as_posix() or "."): p
        for p in sorted(run_dir.rglob(LOG_FILE_NAME))
    }


def load_log(path: Path) -> Optional[SimulationLog]:
    try:
        return SimulationLog.from_json(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError, KeyError, TypeError, WorkbenchError):
        return None


def run_dir_picker(key: str = "run_dir") -> Path:
    """Sidebar input for the directory holding simulation outputs, shared across pages."""
    import streamlit as st
    if key not in st.session_state:
        st.session_state[key] = "runs"
    with st.sidebar:
        st.markdown("### Run directory")
        st.text_input("Path to simulate --out", key=key)
    return Path(st.session_state[key])
