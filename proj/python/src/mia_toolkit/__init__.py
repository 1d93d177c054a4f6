# Copyright 2026 The mia-toolkit Authors.
# SPDX-License-Identifier: Apache-2.0
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
#

"""Python access to the mia toolkit: containers, sampling, assembly and metrics."""

from ._core import (
    MiaError,
    Assembler,
    Dataset,
    Datasource,
    create_dataset,
    evaluate_continuous,
    evaluate_segmentation,
    metric_abbreviations,
)

__all__ = [
    "MiaError",
    "Assembler",
    "Dataset",
    "Datasource",
    "create_dataset",
    "evaluate_continuous",
    "evaluate_segmentation",
    "metric_abbreviations",
]
