#pragma once

#include <stdexcept>
#include <string>

namespace respira {

// Base class for all errors raised by the library. Each concrete type maps
// to one failure mode of the loading / modeling contracts so callers (CLI,
// python bindings) can report machine-readable categories.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

#define RESPIRA_DEFINE_ERROR(NAME)                              \
  class NAME : public Error {                                   \
   public:                                                      \
    explicit NAME(const std::string& what) : Error(#NAME, what) {} \
  }

RESPIRA_DEFINE_ERROR(MissingFile);
RESPIRA_DEFINE_ERROR(SchemaMismatch);
RESPIRA_DEFINE_ERROR(EmptyStream);
RESPIRA_DEFINE_ERROR(NonMonotonicTimestamps);
RESPIRA_DEFINE_ERROR(EmptySeries);
RESPIRA_DEFINE_ERROR(StreamTooShort);
RESPIRA_DEFINE_ERROR(BadKernel);
RESPIRA_DEFINE_ERROR(BadBand);
RESPIRA_DEFINE_ERROR(NoBeatsFound);
RESPIRA_DEFINE_ERROR(SegmentOutOfBounds);
RESPIRA_DEFINE_ERROR(WrongChannelCount);
RESPIRA_DEFINE_ERROR(DegenerateData);
RESPIRA_DEFINE_ERROR(InsufficientData);
RESPIRA_DEFINE_ERROR(UntrainedModel);
RESPIRA_DEFINE_ERROR(TooFewSamples);
RESPIRA_DEFINE_ERROR(DegenerateResponse);
RESPIRA_DEFINE_ERROR(IllConditionedKernel);
RESPIRA_DEFINE_ERROR(DimensionMismatch);
RESPIRA_DEFINE_ERROR(BankUnderflow);
RESPIRA_DEFINE_ERROR(EmptyTestSet);
RESPIRA_DEFINE_ERROR(UnsupportedFamily);
RESPIRA_DEFINE_ERROR(LayoutMismatch);
RESPIRA_DEFINE_ERROR(NoRankableModels);
RESPIRA_DEFINE_ERROR(BadConfig);

#undef RESPIRA_DEFINE_ERROR

}  // namespace respira
