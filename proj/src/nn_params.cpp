#include "mobnet/nn/params.hpp"

#include "mobnet/text_io.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

namespace mobnet::nn {

Param& ModelParams::add(const std::string& name, Matrix value) {
  if (contains(name)) throw Error("duplicate parameter name: " + name);
  if (name.find(' ') != std::string::npos) throw Error("parameter name may not contain spaces");
  items_.push_back(std::make_unique<Param>(name, std::move(value)));
  return *items_.back();
}

Param& ModelParams::at(const std::string& name) {
  if (Param* p = find(name)) return *p;
  throw Error("unknown parameter: " + name);
}

const Param& ModelParams::at(const std::string& name) const {
  for (const auto& p : items_) {
    if (p->name == name) return *p;
  }
  throw Error("unknown parameter: " + name);
}

Param* ModelParams::find(const std::string& name) {
  for (auto& p : items_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

bool ModelParams::contains(const std::string& name) const {
  for (const auto& p : items_) {
    if (p->name == name) return true;
  }
  return false;
}

std::vector<Param*> ModelParams::all() {
  std::vector<Param*> out;
  out.reserve(items_.size());
  for (auto& p : items_) out.push_back(p.get());
  return out;
}

std::vector<const Param*> ModelParams::all() const {
  std::vector<const Param*> out;
  out.reserve(items_.size());
  for (const auto& p : items_) out.push_back(p.get());
  return out;
}

void ModelParams::zero_grads() {
  for (auto& p : items_) {
    p->grad.setZero();
    p->grad_populated = false;
  }
}

namespace {

std::string hex_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double parse_hex_double(const std::string& token) {
  std::string_view s = token;
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    s.remove_prefix(2);
  } else if (s == "inf" || s == "nan") {
    throw Error("non-finite value in checkpoint");
  }
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::hex);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error("bad checkpoint value: " + token);
  }
  return negative ? -v : v;
}

}  // namespace

std::string params_to_string(const ModelParams& params) {
  std::string out = "mobnet-params v1\n";
  out += "count " + std::to_string(params.size()) + "\n";
  for (const Param* p : params.all()) {
    out += "tensor " + p->name + " " + std::to_string(p->value.rows()) + " " +
           std::to_string(p->value.cols()) + "\n";
    for (Index r = 0; r < p->value.rows(); ++r) {
      for (Index c = 0; c < p->value.cols(); ++c) {
        if (c) out += ' ';
        out += hex_double(p->value(r, c));
      }
      out += '\n';
    }
  }
  return out;
}

void save_params(const ModelParams& params, const std::filesystem::path& path) {
  atomic_write(path, params_to_string(params));
}

ModelParams params_from_string(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "mobnet-params v1") {
    throw Error("not a parameter checkpoint (bad magic)");
  }
  std::size_t count = 0;
  {
    std::string word;
    in >> word >> count;
    if (word != "count") throw Error("checkpoint missing count line");
  }
  ModelParams params;
  for (std::size_t t = 0; t < count; ++t) {
    std::string word, name;
    Index rows = 0, cols = 0;
    in >> word >> name >> rows >> cols;
    if (word != "tensor" || rows < 0 || cols < 0) throw Error("malformed tensor header");
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c) {
        std::string token;
        if (!(in >> token)) throw Error("truncated checkpoint in tensor " + name);
        m(r, c) = parse_hex_double(token);
      }
    }
    params.add(name, std::move(m));
  }
  return params;
}

ModelParams load_params(const std::filesystem::path& path) {
  return params_from_string(read_file(path));
}

}  // namespace mobnet::nn
