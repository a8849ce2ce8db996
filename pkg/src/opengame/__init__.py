"""OpenGame: agentic 2D web-game generation and execution-grounded evaluation.

The package is organized around the pipeline stages:

- :mod:`opengame.gateway` -- chat/vision model clients with retries and a
  deterministic fixture-backed mock.
- :mod:`opengame.skills` -- the evolving template library and debug protocol.
- :mod:`opengame.design` -- game-type classification, GDD generation and
  gameConfig merging.
- :mod:`opengame.tilemap`, :mod:`opengame.abcmusic`, :mod:`opengame.assets` --
  the asset tooling (blob auto-tiling, ABC-notation audio, asset manifests).
- :mod:`opengame.workflow` -- the six-phase generation run.
- :mod:`opengame.bench`, :mod:`opengame.scoring`, :mod:`opengame.evaluate` --
  the evaluation harness and the three benchmark metrics.
- :mod:`opengame.cli` -- the ``opengame`` command.
"""

__version__ = "0.1.0"
