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

"""Exceptions raised by the ``neighborgraph`` package."""


class NeighborGraphBaseError(Exception):
    """Base Exception class for all ``neighborgraph`` errors."""

    def __init__(self, msg, path=None, detail=None):
        super().__init__(msg)
        self._msg = msg
        self.path = path
        self.detail = detail

    def __str__(self):
        if self.path and self.detail:
            return f"{self._msg}: {self.detail} ({self.path})"
        if self.path:
            return f"{self._msg} ({self.path})"
        if self.detail:
            return f"{self._msg}: {self.detail}"
        return self._msg


class DataError(NeighborGraphBaseError):
    """Input data could not be used."""


class DataFormatError(DataError):
    pass


class DataConsistencyError(DataError):
    pass


class InvalidArgumentError(NeighborGraphBaseError, ValueError):
    pass


class NumericalError(NeighborGraphBaseError):
    pass
