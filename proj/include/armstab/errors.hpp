// Copyright 2026 The armstab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ARMSTAB_ERRORS_HPP_
#define ARMSTAB_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace armstab {

/// Base class for all armstab errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Chunk/buffer alignment found no candidate with a non-empty overlap.
class EmptyOverlapError : public Error {
 public:
  using Error::Error;
};

/// Interpolation time lies outside the buffered span.
class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

/// Pose history does not cover the requested window.
class InsufficientHistoryError : public Error {
 public:
  using Error::Error;
};

/// Rotation too close to the log-map branch cut (angle >= pi).
class RotationTooLargeError : public Error {
 public:
  using Error::Error;
};

/// Tensor/sequence shape does not match the model architecture.
class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

/// A window lookup asked for an index outside the covered range.
class IndexOutOfRangeError : public Error {
 public:
  using Error::Error;
};

/// Projection of a point at non-positive camera depth.
class BehindCameraError : public Error {
 public:
  using Error::Error;
};

/// Latency metric undefined: platform barely moved during the dwell.
class DegenerateMotionError : public Error {
 public:
  using Error::Error;
};

/// Every latency candidate failed to produce a metric.
class AllDegenerateError : public Error {
 public:
  using Error::Error;
};

/// Bad user input: config, CLI arguments, or file schema.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Filesystem / IO failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace armstab

#endif  // ARMSTAB_ERRORS_HPP_
