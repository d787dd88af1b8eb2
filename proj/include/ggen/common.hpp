// Copyright 2026 The gesturegen Authors
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

#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace ggen {

// Time-major everywhere: rows = frames/tokens, cols = channels.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define GGEN_ERROR_TYPE(Name)          \
  class Name : public ::ggen::Error {  \
   public:                             \
    using ::ggen::Error::Error;        \
  }

// audio-frontend
GGEN_ERROR_TYPE(UnreadableFile);
GGEN_ERROR_TYPE(EmptyAudio);
GGEN_ERROR_TYPE(ClipTooLong);
GGEN_ERROR_TYPE(CountMismatch);
GGEN_ERROR_TYPE(DurationMismatch);

// motion-data
GGEN_ERROR_TYPE(MalformedBVH);
GGEN_ERROR_TYPE(UnsupportedChannels);
GGEN_ERROR_TYPE(TooShort);
GGEN_ERROR_TYPE(UpsampleNotSupported);
GGEN_ERROR_TYPE(LayoutMismatch);

// condition extraction
GGEN_ERROR_TYPE(AudioTooShort);
GGEN_ERROR_TYPE(ExternalModelUnavailable);
GGEN_ERROR_TYPE(SequenceTooShort);
GGEN_ERROR_TYPE(StepOutOfRange);

// backbone / diffusion
GGEN_ERROR_TYPE(ShapeMismatch);
GGEN_ERROR_TYPE(NonFiniteActivation);
GGEN_ERROR_TYPE(InvalidEndpoints);
GGEN_ERROR_TYPE(NonFiniteLoss);
GGEN_ERROR_TYPE(CheckpointMissing);
GGEN_ERROR_TYPE(NonFiniteSample);

// metrics
GGEN_ERROR_TYPE(InsufficientData);
GGEN_ERROR_TYPE(EmptyAudioBeats);
GGEN_ERROR_TYPE(DimensionMismatch);

// pipeline
GGEN_ERROR_TYPE(EmptyCorpus);
GGEN_ERROR_TYPE(ConfigMismatch);

#undef GGEN_ERROR_TYPE

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

}  // namespace ggen
