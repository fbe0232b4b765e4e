"""Write a synthetic 64^3 case for the shell pipeline.

Files written to the output directory:

    image.nii.gz       T1ce-like intensity volume
    truth.nii.gz       reference segmentation
    cartesian.nii.gz   "Cartesian model" output (shifted truth + stray ET spots)
    spherical_model.nii.gz
                       what the spherical-space network would emit once mapped
                       back; here another perturbed copy of the truth

Usage: python3 demos/make_case.py OUTDIR [SIZE]
"""

import sys
from pathlib import Path

from spherebrats import nifti
from spherebrats.synthetic import mri_phantom, perturb_segmentation, tumor_phantom


def main(outdir, size=64):
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    truth = tumor_phantom((size,) * 3, radii=(size * 0.28, size * 0.17, size * 0.11))
    nifti.save(truth, out / "truth.nii.gz")
    nifti.save(mri_phantom(truth, seed=0), out / "image.nii.gz")
    nifti.save(perturb_segmentation(truth, seed=1, shift=(1, 0, 0), n_spots=6), out / "cartesian.nii.gz")
    nifti.save(perturb_segmentation(truth, seed=2, shift=(0, 0, 0), n_spots=10), out / "spherical_model.nii.gz")


if __name__ == "__main__":
    main(sys.argv[1], int(sys.argv[2]) if len(sys.argv) > 2 else 64)
