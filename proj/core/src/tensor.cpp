#include "rotbox/tensor.hpp"

#include <functional>
#include <numeric>
#include <string>

#include "rotbox/error.hpp"

namespace rotbox {

namespace {
std::size_t product(const std::vector<std::size_t>& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}
}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims, double fill)
    : dims_(std::move(dims)), data_(product(dims_), fill) {}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
    if (data_.size() != product(dims_)) {
        throw Error(ErrorCode::ShapeMismatch, "tensor payload has " + std::to_string(data_.size()) +
                                                  " values, dims require " + std::to_string(product(dims_)));
    }
}

}  // namespace rotbox
