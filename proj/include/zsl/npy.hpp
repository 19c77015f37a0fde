#pragma once

#include <string>

#include "zsl/matrix.hpp"

namespace zsl {

enum class NpyDtype { f32, f64 };

/// NPY v1.0, little-endian '<f4'/'<f8', C order, 1-D or 2-D (1-D loads as
/// n x 1). Values widen to double; *stored_dtype reports the file's dtype.
Matrix read_npy(const std::string& path, NpyDtype* stored_dtype = nullptr);

/// Writes NPY v1.0; f32 files narrow each value to float.
void write_npy(const std::string& path, const Matrix& m, NpyDtype dtype);

}  // namespace zsl
