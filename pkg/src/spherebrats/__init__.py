"""Spherical-coordinate resampling, segmentation fusion, evaluation and
survival regression for brain tumor MRI.

Submodules
----------
volume      dense grids, interpolation, BraTS region masks
nifti       NIfTI-1 reader/writer
spherical   Cartesian <-> spherical resampling and origin selection
postproc    WT filter, 3-channel intersection, ET cleanup, ensemble merge
metrics     Dice, sensitivity, specificity, HD95 and cohort summaries
losses      dice / L2 / KL loss terms
survival    PCA + Tweedie GLM survival prediction
synthetic   phantoms and cohorts for demos and tests
"""

from .volume import LabelVolume, Volume3D, region_mask  # noqa: F401

__version__ = "0.1.0"
