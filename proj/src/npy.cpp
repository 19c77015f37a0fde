#include "zsl/npy.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "zsl/errors.hpp"

namespace zsl {

namespace {

const char kNpyMagic[6] = {'\x93', 'N', 'U', 'M', 'P', 'Y'};

std::string dict_value(const std::string& header, const std::string& key,
                       const std::string& path) {
    const std::string quoted = "'" + key + "'";
    const std::size_t kpos = header.find(quoted);
    if (kpos == std::string::npos) {
        throw FormatError(path + ": NPY header missing key " + quoted);
    }
    std::size_t pos = header.find(':', kpos + quoted.size());
    if (pos == std::string::npos) {
        throw FormatError(path + ": NPY header malformed near " + quoted);
    }
    ++pos;
    while (pos < header.size() && header[pos] == ' ') ++pos;
    // Value runs to the next comma at depth zero or the closing brace.
    std::size_t end = pos;
    int depth = 0;
    while (end < header.size()) {
        const char c = header[end];
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if ((c == ',' || c == '}') && depth == 0) break;
        ++end;
    }
    return header.substr(pos, end - pos);
}

}  // namespace

Matrix read_npy(const std::string& path, NpyDtype* stored_dtype) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("read_npy: cannot open " + path);

    char magic[6];
    in.read(magic, 6);
    if (in.gcount() != 6 || std::memcmp(magic, kNpyMagic, 6) != 0) {
        throw FormatError(path + ": not an NPY file (bad magic)");
    }
    unsigned char version[2];
    in.read(reinterpret_cast<char*>(version), 2);
    if (in.gcount() != 2 || version[0] != 1 || version[1] != 0) {
        throw FormatError(path + ": unsupported NPY version (only 1.0)");
    }
    std::uint16_t header_len = 0;
    in.read(reinterpret_cast<char*>(&header_len), 2);
    if (in.gcount() != 2) throw FormatError(path + ": truncated NPY header length");
    std::string header(header_len, '\0');
    in.read(header.data(), header_len);
    if (static_cast<std::uint16_t>(in.gcount()) != header_len) {
        throw FormatError(path + ": truncated NPY header");
    }

    const std::string descr = dict_value(header, "descr", path);
    NpyDtype dtype;
    if (descr == "'<f4'") {
        dtype = NpyDtype::f32;
    } else if (descr == "'<f8'") {
        dtype = NpyDtype::f64;
    } else {
        throw FormatError(path + ": unsupported NPY descr " + descr +
                          " (only '<f4' and '<f8')");
    }
    if (stored_dtype) *stored_dtype = dtype;

    const std::string order = dict_value(header, "fortran_order", path);
    if (order != "False") {
        throw FormatError(path + ": fortran_order must be False");
    }

    std::string shape = dict_value(header, "shape", path);
    if (shape.size() < 2 || shape.front() != '(' || shape.back() != ')') {
        throw FormatError(path + ": malformed NPY shape " + shape);
    }
    shape = shape.substr(1, shape.size() - 2);
    std::vector<std::size_t> dims;
    std::stringstream ss(shape);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        std::size_t p = tok.find_first_not_of(' ');
        if (p == std::string::npos) continue;  // trailing comma of a 1-D shape
        dims.push_back(static_cast<std::size_t>(std::stoull(tok.substr(p))));
    }
    if (dims.empty() || dims.size() > 2) {
        throw FormatError(path + ": NPY shape must be 1-D or 2-D, got (" + shape + ")");
    }
    const std::size_t rows = dims[0];
    const std::size_t cols = dims.size() == 2 ? dims[1] : 1;

    Matrix m(rows, cols);
    const std::size_t count = rows * cols;
    if (dtype == NpyDtype::f32) {
        std::vector<float> buf(count);
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(count * sizeof(float)));
        if (static_cast<std::size_t>(in.gcount()) != count * sizeof(float)) {
            throw FormatError(path + ": truncated NPY data");
        }
        for (std::size_t i = 0; i < count; ++i) m.data[i] = static_cast<double>(buf[i]);
    } else {
        in.read(reinterpret_cast<char*>(m.data.data()),
                static_cast<std::streamsize>(count * sizeof(double)));
        if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double)) {
            throw FormatError(path + ": truncated NPY data");
        }
    }
    return m;
}

void write_npy(const std::string& path, const Matrix& m, NpyDtype dtype) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("write_npy: cannot open " + path);

    std::string header = "{'descr': '";
    header += (dtype == NpyDtype::f32) ? "<f4" : "<f8";
    header += "', 'fortran_order': False, 'shape': (";
    header += std::to_string(m.rows) + ", " + std::to_string(m.cols);
    header += "), }";
    // Pad with spaces so the data start is 64-byte aligned; '\n' terminates.
    const std::size_t preamble = 6 + 2 + 2;
    std::size_t total = preamble + header.size() + 1;
    const std::size_t padded = (total + 63) / 64 * 64;
    header.append(padded - total, ' ');
    header.push_back('\n');

    out.write(kNpyMagic, 6);
    const unsigned char version[2] = {1, 0};
    out.write(reinterpret_cast<const char*>(version), 2);
    const std::uint16_t header_len = static_cast<std::uint16_t>(header.size());
    out.write(reinterpret_cast<const char*>(&header_len), 2);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));

    if (dtype == NpyDtype::f32) {
        std::vector<float> buf(m.data.size());
        for (std::size_t i = 0; i < m.data.size(); ++i) {
            buf[i] = static_cast<float>(m.data[i]);
        }
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
    } else {
        out.write(reinterpret_cast<const char*>(m.data.data()),
                  static_cast<std::streamsize>(m.data.size() * sizeof(double)));
    }
    if (!out) throw FormatError("write_npy: write failed for " + path);
}

}  // namespace zsl
