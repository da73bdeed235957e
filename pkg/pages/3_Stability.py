"""Relative entropy, bulk error and their Gronwall bounds."""

import streamlit as st
from analysis import gronwall_integrals
from charts import plot_energies, plot_stability

st.header("Stability")

if "run_frames" not in st.session_state:
    st.info("Load a run from the sidebar first.")
    st.stop()

stability = st.session_state.run_frames.get("stability")
if stability is None or stability.empty:
    st.warning("This run has no stability series.")
    st.stop()

st.plotly_chart(plot_energies(stability), use_container_width=True)

if "rel_entropy" not in stability:
    st.info("No reference flow was selected for this run.")
    st.stop()

st.plotly_chart(plot_stability(stability), use_container_width=True)

gronwall = st.session_state.run_summary.get("gronwall")
if gronwall:
    cols = st.columns(3)
    cols[0].metric("C used", f"{gronwall['C']:.3g}")
    cols[1].metric("smallest C (relEn)", f"{gronwall['smallest_C_relEn']:.3g}")
    cols[2].metric("smallest C (bulk)", f"{gronwall['smallest_C_bulk']:.3g}")

with st.expander("Data table"):
    st.dataframe(gronwall_integrals(stability))
