#include "convdiff/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <limits>
#include <sstream>

#include "convdiff/errors.hpp"

namespace convdiff {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

// ---- Netpbm ----------------------------------------------------------------

namespace {

class HeaderReader {
 public:
  HeaderReader(std::span<const std::uint8_t> bytes, std::size_t start) : bytes_(bytes), pos_(start) {}

  std::size_t offset() const { return pos_; }

  void skip_whitespace_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  std::uint64_t read_unsigned(const char* field) {
    skip_whitespace_and_comments();
    const std::size_t start = pos_;
    std::uint64_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > std::numeric_limits<std::uint32_t>::max()) throw ParseError(std::string(field) + " too large", start);
      ++pos_;
    }
    if (pos_ == start) throw ParseError(std::string("expected ") + field + " in netpbm header", start);
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void expect_single_whitespace() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
      throw ParseError("expected whitespace after netpbm header", pos_);
    ++pos_;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
};

constexpr std::uint64_t kMaxNetpbmSide = 1u << 16;

}  // namespace

Image decode_netpbm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw ParseError("unsupported image format: expected binary PGM (P5) or PPM (P6)", 0);
  const std::size_t channels = bytes[1] == '5' ? 1 : 3;

  HeaderReader header(bytes, 2);
  const auto width = header.read_unsigned("width");
  const auto height = header.read_unsigned("height");
  const auto maxval = header.read_unsigned("maxval");
  if (maxval != 255 && maxval != 65535)
    throw ParseError("unsupported maxval " + std::to_string(maxval) + " (expected 255 or 65535)",
                     header.offset());
  if (width == 0 || height == 0 || width > kMaxNetpbmSide || height > kMaxNetpbmSide)
    throw ParseError("unsupported image dimensions " + std::to_string(width) + "x" + std::to_string(height),
                     header.offset());
  header.expect_single_whitespace();

  const std::size_t data_start = header.offset();
  const std::size_t bytes_per_sample = maxval == 255 ? 1 : 2;
  const std::size_t needed = width * height * channels * bytes_per_sample;
  if (bytes.size() - data_start < needed)
    throw ParseError("truncated raster: need " + std::to_string(needed) + " bytes from offset " +
                         std::to_string(data_start) + ", file ends early",
                     bytes.size());

  std::vector<RealGrid> planes(channels, RealGrid(height, width));
  const double scale = 1.0 / static_cast<double>(maxval);
  const std::uint8_t* p = bytes.data() + data_start;
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c)
      for (std::size_t ch = 0; ch < channels; ++ch) {
        unsigned v = *p++;
        if (bytes_per_sample == 2) v = (v << 8) | *p++;  // big-endian
        planes[ch](r, c) = v * scale;
      }
  try {
    return Image(std::move(planes));
  } catch (const InvalidInputError& e) {
    throw ParseError(std::string("invalid image: ") + e.what());
  }
}

Image read_image(const std::filesystem::path& path) {
  try {
    return decode_netpbm(read_file_bytes(path));
  } catch (const ParseError& e) {
    throw e.prefixed(path.string());
  }
}

std::vector<std::uint8_t> encode_netpbm(const Image& img, std::uint32_t maxval) {
  if (maxval != 255 && maxval != 65535) throw InvalidInputError("maxval must be 255 or 65535");
  if (img.channels() != 1 && img.channels() != 3) throw InvalidInputError("netpbm needs 1 or 3 channels");

  const std::string header = std::string(img.channels() == 1 ? "P5" : "P6") + "\n" + std::to_string(img.width()) +
                             " " + std::to_string(img.height()) + "\n" + std::to_string(maxval) + "\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + img.sample_count() * (maxval == 255 ? 1 : 2));
  for (std::size_t r = 0; r < img.height(); ++r)
    for (std::size_t c = 0; c < img.width(); ++c)
      for (std::size_t ch = 0; ch < img.channels(); ++ch) {
        const double v = std::clamp(img(ch, r, c), 0.0, 1.0);
        const auto q = static_cast<unsigned>(std::lround(v * maxval));
        if (maxval == 65535) out.push_back(static_cast<std::uint8_t>(q >> 8));
        out.push_back(static_cast<std::uint8_t>(q & 0xFF));
      }
  return out;
}

void write_image(const std::filesystem::path& path, const Image& img, std::uint32_t maxval) {
  write_file_bytes(path, encode_netpbm(img, maxval));
}

// ---- Tensors ---------------------------------------------------------------

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[offset + i]) << (8 * i);
  return v;
}

}  // namespace

std::size_t Tensor::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  if (t.values.size() != t.element_count())
    throw InvalidInputError("tensor payload has " + std::to_string(t.values.size()) + " values, dims need " +
                            std::to_string(t.element_count()));
  std::vector<std::uint8_t> out(std::begin(kTensorMagic), std::end(kTensorMagic));
  put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) put_u32(out, d);
  for (float v : t.values) {
    if (!std::isfinite(v)) throw InvalidInputError("tensor values must be finite");
    put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || !std::equal(std::begin(kTensorMagic), std::end(kTensorMagic), bytes.begin()))
    throw ParseError("not a tensor file (bad magic)", 0);
  Tensor t;
  const std::uint32_t ndim = get_u32(bytes, 8);
  std::size_t offset = 12;
  if (bytes.size() < offset + 4ull * ndim) throw ParseError("truncated tensor dims", bytes.size());
  const std::size_t max_count = bytes.size() / 4;
  std::size_t count = 1;
  for (std::uint32_t i = 0; i < ndim; ++i, offset += 4) {
    t.dims.push_back(get_u32(bytes, offset));
    const std::size_t d = t.dims.back();
    if (d != 0 && count > max_count / d)
      throw ParseError("tensor dims exceed the file size", bytes.size());
    count *= d;
  }
  if (bytes.size() - offset != 4 * count)
    throw ParseError("tensor payload is " + std::to_string(bytes.size() - offset) + " bytes, dims need " +
                         std::to_string(4 * count),
                     std::min(bytes.size(), offset + 4 * count));
  t.values.resize(count);
  for (std::size_t i = 0; i < count; ++i, offset += 4) {
    t.values[i] = std::bit_cast<float>(get_u32(bytes, offset));
    if (!std::isfinite(t.values[i])) throw ParseError("non-finite tensor value", offset);
  }
  return t;
}

Tensor read_tensor(const std::filesystem::path& path) {
  try {
    return decode_tensor(read_file_bytes(path));
  } catch (const ParseError& e) {
    throw e.prefixed(path.string());
  }
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) { write_file_bytes(path, encode_tensor(t)); }

Tensor image_to_tensor(const Image& img) {
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(img.channels()), static_cast<std::uint32_t>(img.height()),
            static_cast<std::uint32_t>(img.width())};
  t.values.reserve(img.sample_count());
  for (const auto& p : img.planes())
    for (double v : p) t.values.push_back(static_cast<float>(v));
  return t;
}

Image tensor_to_image(const Tensor& t) {
  std::uint32_t channels = 1, height = 0, width = 0;
  if (t.dims.size() == 3) {
    channels = t.dims[0];
    height = t.dims[1];
    width = t.dims[2];
  } else if (t.dims.size() == 2) {
    height = t.dims[0];
    width = t.dims[1];
  } else {
    throw ParseError("image tensor must have 2 or 3 dims, got " + std::to_string(t.dims.size()));
  }
  if (t.values.size() != t.element_count()) throw ParseError("tensor payload does not match dims");
  std::vector<RealGrid> planes(channels, RealGrid(height, width));
  std::size_t i = 0;
  for (auto& p : planes)
    for (double& v : p) v = t.values[i++];
  try {
    return Image(std::move(planes));
  } catch (const InvalidInputError& e) {
    throw ParseError(std::string("tensor is not a valid image: ") + e.what());
  }
}

Tensor scalar_tensor(float value) { return Tensor{{}, {value}}; }

// ---- Kernel files ----------------------------------------------------------

KernelFile parse_kernel_file(const std::string& text) {
  std::istringstream in(text);
  std::string size_token, sigma_token;
  if (!(in >> size_token >> sigma_token)) throw ParseError("kernel file: missing '<size> <sigma_hint>' header");
  std::size_t size = 0;
  double sigma_hint = 0.0;
  try {
    std::size_t used = 0;
    const long parsed = std::stol(size_token, &used);
    if (used != size_token.size() || parsed <= 0) throw std::invalid_argument("size");
    size = static_cast<std::size_t>(parsed);
    sigma_hint = sigma_token == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(sigma_token);
  } catch (const std::exception&) {
    throw ParseError("kernel file: malformed header '" + size_token + " " + sigma_token + "'");
  }
  std::vector<double> taps;
  taps.reserve(size * size);
  std::string token;
  while (in >> token) {
    try {
      taps.push_back(std::stod(token));
    } catch (const std::exception&) {
      throw ParseError("kernel file: bad tap '" + token + "'");
    }
  }
  if (taps.size() != size * size)
    throw ParseError("kernel file: expected " + std::to_string(size * size) + " taps, found " +
                     std::to_string(taps.size()));
  try {
    return KernelFile{Kernel(size, std::move(taps)), sigma_hint};
  } catch (const InvalidInputError& e) {
    throw ParseError(std::string("kernel file: ") + e.what());
  }
}

KernelFile read_kernel_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return parse_kernel_file(std::string(bytes.begin(), bytes.end()));
  } catch (const ParseError& e) {
    throw e.prefixed(path.string());
  }
}

std::string format_kernel_file(const Kernel& k, double sigma_hint) {
  std::ostringstream out;
  out << k.size() << ' ';
  if (std::isnan(sigma_hint))
    out << "nan";
  else
    out << std::setprecision(17) << sigma_hint;
  out << '\n' << std::setprecision(17);
  for (std::size_t r = 0; r < k.size(); ++r) {
    for (std::size_t c = 0; c < k.size(); ++c) {
      if (c) out << ' ';
      out << k.taps()[r * k.size() + c];
    }
    out << '\n';
  }
  return out.str();
}

void write_kernel_file(const std::filesystem::path& path, const Kernel& k, double sigma_hint) {
  const std::string text = format_kernel_file(k, sigma_hint);
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// ---- Config ----------------------------------------------------------------

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

std::map<std::string, std::string> parse_config(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("config line " + std::to_string(line_no) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("config line " + std::to_string(line_no) + ": empty key");
    out[std::move(key)] = trim(line.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> read_config(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_config(std::string(bytes.begin(), bytes.end()));
}

}  // namespace convdiff
