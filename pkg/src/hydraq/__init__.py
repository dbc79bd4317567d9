"""Hydration-biomarker regression with simulated variational quantum circuits.

Modules, bottom-up: ``statevector`` (dense simulator), ``circuit`` (layer IR
and evaluation), ``learn`` (gradients, Adam, training), ``preprocess``
(standardize, PCA, angle scaling), ``datasets`` (synthetic data and CSV),
``baseline`` (boosted trees), ``models`` (bundles), ``metrics``/``bench``
(reports) and ``cli``.
"""

__version__ = "0.1.0"
