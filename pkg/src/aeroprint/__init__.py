"""aeroprint: chunk decomposition and flight emulation for aerial 3D printing.

Pipeline: a watertight mesh is decomposed into liftable chunks by a beam
search over planar cuts (tracked in a BSP tree), chunks are sliced into
deposition toolpaths, sequenced onto simulated UAVs, and the print mission is
emulated with an NMPC-tracked quadrotor that drops virtual material markers.
"""

__version__ = "0.1.0"
