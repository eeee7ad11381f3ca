"""polyvae: graph-based multitrack symbolic music VAE.

Submodules: smf (MIDI files), pianoroll (the 4x32 grid), graph
(chord-level graphs), nn (autodiff), model (the VAE), training, metrics,
generate, service (HTTP API), cli.
"""

__version__ = "0.1.0"
