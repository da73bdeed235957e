"""Energy ledger of the loaded run."""

import streamlit as st
from analysis import summarize_ledger
from charts import plot_energy_ledger

st.header("Energy Ledger")

if "run_frames" not in st.session_state:
    st.info("Load a run from the sidebar first.")
    st.stop()

ledger = st.session_state.run_frames.get("energy_ledger")
if ledger is None or ledger.empty:
    st.warning("This run has no energy ledger.")
    st.stop()

summary = summarize_ledger(ledger)
cols = st.columns(3)
cols[0].metric("E initial", f"{summary['E_initial']:.6g}")
cols[1].metric("E final", f"{summary['E_final']:.6g}")
cols[2].metric("worst increase", f"{summary['max_energy_increase']:.3g}")

st.plotly_chart(plot_energy_ledger(ledger), use_container_width=True)

with st.expander("Data table"):
    st.dataframe(ledger)
