#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "cantcn/nn/tcn.hpp"

namespace cantcn::nn {

inline constexpr std::uint32_t kModelFormatVersion = 1;

class ModelFormatError : public std::runtime_error
{
    using std::runtime_error::runtime_error;
};

/// Binary layout, little-endian: magic "CANTCNM\0", u32 version, u32
/// n_signals, u32 filters, u32 kernel_size, u32 block count, u32 dilation per
/// block, u8 relu_after_add, then every parameter array in model order as
/// u64 length followed by that many f64 values.
std::string serialize_model(const TcnModel& model);
TcnModel deserialize_model(std::string_view bytes);

void save_model(const TcnModel& model, const std::string& path);
TcnModel load_model(const std::string& path);

} // namespace cantcn::nn
