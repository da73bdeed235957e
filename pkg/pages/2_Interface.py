"""Extracted interfaces and normal velocities."""

import streamlit as st
from charts import plot_interface, plot_normal_velocity

st.header("Interface")

if "run_frames" not in st.session_state:
    st.info("Load a run from the sidebar first.")
    st.stop()

interface = st.session_state.run_frames.get("interface")
if interface is None or interface.empty:
    st.warning("No interface was extracted in this run.")
    st.stop()

max_curves = st.slider("Snapshots shown", min_value=2, max_value=40, value=12)
fig = plot_interface(interface, max_curves=max_curves)
st.plotly_chart(fig, use_container_width=True)

times = sorted(interface["t"].unique())
t = st.select_slider("Velocity snapshot", options=times, value=times[len(times) // 2])
st.plotly_chart(plot_normal_velocity(interface, t), use_container_width=True)

geometry = st.session_state.run_geometry
if geometry:
    with st.expander("Geometry"):
        st.json({k: geometry[k] for k in ("components", "contact_points", "volume_continuity") if k in geometry})
