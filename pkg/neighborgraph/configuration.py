# Copyright 2024-present The sextant authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Numeric constants and defaults used by the ``neighborgraph`` package."""

from neighborgraph.utils import JSONObject

METRICS = ("euclidean", "cosine", "jaccard")

# Default configuration values.
CONFIG_DEFAULTS = JSONObject.from_dict(
    {
        # Smooth k-NN bandwidth calibration.
        "SIGMA_TOLERANCE": 1e-5,
        "SIGMA_MAX_ITER": 64,
        "SIGMA_FLOOR_SCALE": 1e-3,
        # Low dimensional curve fit.
        "CURVE_SAMPLES": 300,
        "CURVE_T_MAX": 3.0,
        "CURVE_MAX_EVALS": 5000,
        # Spectral initialization.
        "EIGEN_MAX_ITER": 1000,
        "EIGEN_TOLERANCE": 1e-8,
        "DENSE_EIGEN_LIMIT": 2000,
        "MAX_COORD": 10.0,
        "INIT_NOISE": 1e-4,
        "COMPONENT_SPACING": 10.0,
        # Layout optimization.
        "NEG_RATE": 5,
        "LEARNING_RATE": 1.0,
        "GRAD_CLIP": 4.0,
        "REPULSION_EPS": 1e-3,
        "LARGE_DATASET": 10000,
        "EPOCHS_LARGE": 200,
        "EPOCHS_SMALL": 500,
        # Evaluation.
        "KMEANS_N_INIT": 10,
        "KMEANS_MAX_ITER": 300,
        "SEEDS": [0, 1, 2, 3, 4],
        # Hyperparameter grid, start:stop:step with inclusive stop.
        "K_RANGE": "10:50:5",
        "MIN_DIST_RANGE": "0:1:0.1",
        # Rows of the distance matrix computed per block in exact k-NN.
        "KNN_BLOCK_SIZE": 512,
    }
)


def default_n_epochs(n_points):
    """Number of layout epochs used when none is given."""
    if n_points > CONFIG_DEFAULTS.LARGE_DATASET:
        return CONFIG_DEFAULTS.EPOCHS_LARGE
    return CONFIG_DEFAULTS.EPOCHS_SMALL
