#include "spikehar/signal_ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "spikehar/error.hpp"

namespace spikehar {

namespace {

// Slack for floor() on products like 1.95 * 1000 that land a hair below an integer.
constexpr double kCountEps = 1e-9;

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_int(const std::string& s, int& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::size_t floor_count(double x) { return static_cast<std::size_t>(std::floor(x + kCountEps)); }

}  // namespace

const std::vector<std::string>& default_channel_names() {
  static const std::vector<std::string> names{"acc_x", "acc_y", "acc_z", "gyr_x",
                                              "gyr_y", "gyr_z", "cap"};
  return names;
}

std::vector<double> SampleMatrix::column(std::size_t c) const {
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = (*this)(r, c);
  return out;
}

void RawRecording::validate() const {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz))
    throw ConfigError("sample_rate_hz must be positive");
  if (samples.rows < 2) throw InsufficientDataError("recording needs at least 2 rows");
  if (samples.cols != static_cast<std::size_t>(kChannelCount))
    throw ConfigError("recording must have exactly 7 channels");
  if (labels.size() != samples.rows) throw ConfigError("labels length differs from row count");
}

InterpMethod parse_interp_method(const std::string& s) {
  if (s == "cubic_spline" || s == "spline" || s == "cubic") return InterpMethod::cubic_spline;
  if (s == "linear") return InterpMethod::linear;
  throw ConfigError("unknown resample method '" + s + "'");
}

LabelRule parse_label_rule(const std::string& s) {
  if (s == "majority") return LabelRule::majority;
  if (s == "center_sample" || s == "center") return LabelRule::center_sample;
  throw ConfigError("unknown label rule '" + s + "'");
}

RawRecording load_csv(const std::filesystem::path& path, const std::vector<std::string>& schema,
                      std::optional<double> rate_hz) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  RawRecording rec;
  rec.subject_id = path.stem().string();
  rec.channels = schema;
  std::optional<double> file_rate;

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      std::string body = trim(std::string_view(t).substr(1));
      auto eq = body.find('=');
      if (eq == std::string::npos) continue;
      std::string key = trim(std::string_view(body).substr(0, eq));
      std::string val = trim(std::string_view(body).substr(eq + 1));
      if (key == "rate_hz") {
        double r = 0;
        if (!parse_double(val, r)) throw ParseError(line_no, "bad rate_hz '" + val + "'");
        file_rate = r;
      } else if (key == "subject_id") {
        rec.subject_id = val;
      } else if (key == "session_id") {
        rec.session_id = val;
      }
      continue;
    }
    header = split_commas(t);
    break;
  }
  if (header.empty()) throw InsufficientDataError(path.string() + ": no header row");

  std::map<std::string, std::size_t> col_of;
  for (std::size_t i = 0; i < header.size(); ++i) col_of[header[i]] = i;
  std::vector<std::size_t> channel_cols;
  for (const auto& name : schema) {
    auto it = col_of.find(name);
    if (it == col_of.end()) throw SchemaError(name);
    channel_cols.push_back(it->second);
  }
  auto label_it = col_of.find("label");
  if (label_it == col_of.end()) throw SchemaError("label");
  const std::size_t label_col = label_it->second;

  std::vector<double> data;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto cells = split_commas(t);
    if (cells.size() != header.size())
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " cells, got " +
                                    std::to_string(cells.size()));
    for (std::size_t c : channel_cols) {
      double v = 0;
      if (!parse_double(cells[c], v))
        throw ParseError(line_no, "non-numeric value '" + cells[c] + "' in column '" + header[c] + "'");
      data.push_back(v);
    }
    int label = 0;
    if (!parse_int(cells[label_col], label) || label < 0 || label > 11)
      throw ParseError(line_no, "bad label '" + cells[label_col] + "'");
    rec.labels.push_back(label);
  }

  if (rec.labels.size() < 2)
    throw InsufficientDataError(path.string() + ": fewer than 2 data rows");
  rec.samples.rows = rec.labels.size();
  rec.samples.cols = schema.size();
  rec.samples.data = std::move(data);

  if (file_rate) {
    rec.sample_rate_hz = *file_rate;
  } else if (rate_hz) {
    rec.sample_rate_hz = *rate_hz;
  } else {
    throw ConfigError(path.string() + ": sample rate missing (no '# rate_hz=' line and none configured)");
  }
  if (!(rec.sample_rate_hz > 0.0)) throw ConfigError("sample rate must be positive");
  return rec;
}

void write_csv(const std::filesystem::path& path, const RawRecording& rec) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", rec.sample_rate_hz);
  out << "# rate_hz=" << buf << '\n';
  if (!rec.subject_id.empty()) out << "# subject_id=" << rec.subject_id << '\n';
  if (!rec.session_id.empty()) out << "# session_id=" << rec.session_id << '\n';
  for (const auto& c : rec.channels) out << c << ',';
  out << "label\n";
  for (std::size_t r = 0; r < rec.samples.rows; ++r) {
    for (std::size_t c = 0; c < rec.samples.cols; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", rec.samples(r, c));
      out << buf << ',';
    }
    out << rec.labels[r] << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)), m_(x_.size(), 0.0) {
  const std::size_t n = x_.size();
  if (n != y_.size() || n < 2) throw InsufficientDataError("spline needs >= 2 matching knots");
  if (n == 2) return;
  // Tridiagonal solve (Thomas) for the interior second derivatives; m_0 = m_{n-1} = 0.
  std::vector<double> c(n, 0.0), d(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x_[i] - x_[i - 1];
    const double h1 = x_[i + 1] - x_[i];
    const double a = h0, b = 2.0 * (h0 + h1), cc = h1;
    const double rhs = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
    const double denom = b - a * c[i - 1];
    c[i] = cc / denom;
    d[i] = (rhs - a * d[i - 1]) / denom;
  }
  for (std::size_t i = n - 2; i >= 1; --i) {
    m_[i] = d[i] - c[i] * m_[i + 1];
    if (i == 1) break;
  }
}

double CubicSpline::operator()(double xq) const {
  const std::size_t n = x_.size();
  std::size_t i;
  if (xq <= x_.front()) {
    i = 0;
  } else if (xq >= x_.back()) {
    i = n - 2;
  } else {
    i = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), xq) - x_.begin()) - 1;
  }
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - xq) / h;
  const double b = (xq - x_[i]) / h;
  return a * y_[i] + b * y_[i + 1] +
         ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * (h * h) / 6.0;
}

RawRecording resample(const RawRecording& rec, const ResampleSpec& spec) {
  if (!(spec.target_rate_hz > 0.0) || !std::isfinite(spec.target_rate_hz))
    throw ConfigError("target_rate_hz must be positive");
  rec.validate();

  const std::size_t n_in = rec.samples.rows;
  const double duration = rec.duration_s();
  const std::size_t n_out = floor_count(duration * spec.target_rate_hz) + 1;
  // Positions are expressed in input-sample units so knots sit on integers.
  const double step = rec.sample_rate_hz / spec.target_rate_hz;
  const double last = static_cast<double>(n_in - 1);

  std::vector<double> pos(n_out);
  for (std::size_t k = 0; k < n_out; ++k) pos[k] = std::min(static_cast<double>(k) * step, last);
  // Exact grid hit at the end keeps the final sample equal to the input's.
  if (std::abs(pos.back() - last) < 1e-6) pos.back() = last;

  RawRecording out;
  out.subject_id = rec.subject_id;
  out.session_id = rec.session_id;
  out.sample_rate_hz = spec.target_rate_hz;
  out.channels = rec.channels;
  out.samples = SampleMatrix(n_out, rec.samples.cols);
  out.labels.resize(n_out);

  std::vector<double> knots(n_in);
  for (std::size_t i = 0; i < n_in; ++i) knots[i] = static_cast<double>(i);

  for (std::size_t c = 0; c < rec.samples.cols; ++c) {
    std::vector<double> y = rec.samples.column(c);
    if (spec.method == InterpMethod::cubic_spline) {
      CubicSpline spline(knots, y);
      for (std::size_t k = 0; k < n_out; ++k) out.samples(k, c) = spline(pos[k]);
    } else {
      for (std::size_t k = 0; k < n_out; ++k) {
        const double p = pos[k];
        std::size_t i = static_cast<std::size_t>(std::floor(p));
        if (i >= n_in - 1) i = n_in - 2;
        const double f = p - static_cast<double>(i);
        out.samples(k, c) = y[i] + f * (y[i + 1] - y[i]);
      }
    }
  }
  for (std::size_t k = 0; k < n_out; ++k) {
    auto i = static_cast<std::size_t>(std::llround(pos[k]));
    out.labels[k] = rec.labels[std::min(i, n_in - 1)];
  }
  return out;
}

std::vector<Window> slice_windows(const RawRecording& rec, const WindowSpec& spec) {
  if (!(spec.window_s > 0.0) || !(spec.stride_s > 0.0))
    throw ConfigError("window_s and stride_s must be positive");
  const std::size_t len = floor_count(spec.window_s * rec.sample_rate_hz);
  const std::size_t stride = std::max<std::size_t>(1, floor_count(spec.stride_s * rec.sample_rate_hz));
  const std::size_t n = rec.samples.rows;
  std::vector<Window> out;
  if (len == 0 || n < len) return out;

  const std::size_t count = (n - len) / stride + 1;
  out.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    Window win;
    win.start_row = w * stride;
    win.samples = SampleMatrix(len, rec.samples.cols);
    std::copy_n(rec.samples.data.begin() + static_cast<std::ptrdiff_t>(win.start_row * rec.samples.cols),
                len * rec.samples.cols, win.samples.data.begin());
    if (spec.label_rule == LabelRule::center_sample) {
      win.label = rec.labels[win.start_row + len / 2];
    } else {
      std::array<std::size_t, 12> tally{};
      for (std::size_t r = win.start_row; r < win.start_row + len; ++r) ++tally[rec.labels[r]];
      win.label = static_cast<int>(std::max_element(tally.begin(), tally.end()) - tally.begin());
    }
    out.push_back(std::move(win));
  }
  return out;
}

}  // namespace spikehar
