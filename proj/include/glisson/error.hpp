#pragma once

#include <stdexcept>
#include <string>

namespace glisson {

/// Invalid argument or configuration value. CLI maps this to exit code 2.
struct ParamError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Broken or missing input data (files, manifests, model containers).
/// CLI maps this to exit code 3.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Training loss became non-finite. CLI maps this to exit code 4.
struct TrainDivergence : std::runtime_error {
    TrainDivergence(int epoch_, double learning_rate_)
        : std::runtime_error("training diverged (non-finite loss) at epoch " +
                             std::to_string(epoch_) + " with learning rate " +
                             std::to_string(learning_rate_)),
          epoch(epoch_),
          learning_rate(learning_rate_) {}

    int epoch;
    double learning_rate;
};

} // namespace glisson
