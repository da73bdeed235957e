"""Convergence tables of eps sweeps."""

import streamlit as st
from charts import plot_convergence

st.header("Convergence")

if "run_frames" not in st.session_state:
    st.info("Load a sweep from the sidebar first.")
    st.stop()

table = st.session_state.run_frames.get("convergence")
if table is None or table.empty:
    st.warning("The loaded run is not a sweep.")
    st.stop()

if "partial" in table and table["partial"].any():
    st.warning("Partial table: a sweep member failed.")

error_columns = [c for c in table.columns
                 if c not in ("eps", "h", "partial", "checks_passed") and not c.endswith("_order")]
selected = st.multiselect("Errors", error_columns, default=error_columns)
if not selected:
    st.warning("Select at least one error column.")
    st.stop()

st.plotly_chart(plot_convergence(table, selected), use_container_width=True)

with st.expander("Data table"):
    st.dataframe(table)
