#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include <json.hpp>

#include "hypergat/error.hpp"
#include "hypergat/io_audit.hpp"
#include "hypergat/model.hpp"
#include "hypergat/store.hpp"

namespace hypergat {

inline constexpr char kModelMagic[5] = {'H', 'G', 'A', 'T', '1'};

template <typename S>
struct Checkpoint {
  HyperGATModel<S> model;
  std::vector<std::string> labels;
  std::string vocab_hash;
  std::uint64_t seed = 0;
  nlohmann::json config_echo;
};

// Layout: magic, u32 header length, JSON header, then every parameter tensor
// as row-major little-endian float32 in declared order (per layer w1, w2, a1,
// a2; then the classifier weight and bias). Doubles are narrowed on save.
template <typename S>
void save_checkpoint(const std::string& path, const HyperGATModel<S>& model,
                     const std::vector<std::string>& labels,
                     const std::string& vhash, std::uint64_t seed,
                     const nlohmann::json& config_echo) {
  auto out = io::open_output(path, /*binary=*/true);
  out.write(kModelMagic, 5);
  nlohmann::json header;
  header["spec_version"] = kSpecVersion;
  header["dims"] = model.dims;
  header["classes"] = model.classes;
  header["variant"] = variant_name(model.variant);
  header["dropout_p"] = model.dropout_p;
  header["vocab_hash"] = vhash;
  header["seed"] = seed;
  header["labels"] = labels;
  header["config"] = config_echo;
  const std::string hs = header.dump();
  bin::put_u32(out, static_cast<std::uint32_t>(hs.size()));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));

  auto put_tensor = [&out](const std::vector<S>& v) {
    for (S x : v) bin::put_f32(out, static_cast<float>(x));
  };
  for (const auto& lp : model.layers) {
    put_tensor(lp.w1.data);
    put_tensor(lp.w2.data);
    put_tensor(lp.a1);
    put_tensor(lp.a2);
  }
  put_tensor(model.wc.data);
  put_tensor(model.bc);
  if (!out) throw DataError("failed writing " + path);
}

template <typename S>
Checkpoint<S> load_checkpoint(const std::string& path) {
  auto in = io::open_input(path, /*binary=*/true);
  char magic[5];
  if (!in.read(magic, 5) || std::memcmp(magic, kModelMagic, 5) != 0)
    throw DataError(path + " is not a model checkpoint");
  const std::uint32_t hlen = bin::take_u32(in, "checkpoint header");
  std::string hs(hlen, '\0');
  if (!in.read(hs.data(), hlen)) throw DataError(path + ": truncated header");

  Checkpoint<S> ck;
  std::vector<int> dims;
  int classes = 0;
  std::string variant;
  double dropout_p = 0.0;
  try {
    const nlohmann::json header = nlohmann::json::parse(hs);
    dims = header.at("dims").get<std::vector<int>>();
    classes = header.at("classes").get<int>();
    variant = header.at("variant").get<std::string>();
    dropout_p = header.at("dropout_p").get<double>();
    ck.vocab_hash = header.at("vocab_hash").get<std::string>();
    ck.seed = header.at("seed").get<std::uint64_t>();
    ck.labels = header.at("labels").get<std::vector<std::string>>();
    ck.config_echo = header.value("config", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": bad checkpoint header: " + e.what());
  }
  if (static_cast<int>(ck.labels.size()) != classes)
    throw DataError(path + ": label list does not match class count");

  HyperGATModel<S> model;
  model.dims = dims;
  model.classes = classes;
  model.variant = parse_variant(variant);
  model.dropout_p = dropout_p;
  if (dims.size() < 2) throw DataError(path + ": bad dims");
  auto take_tensor = [&in, &path](std::vector<S>& v, std::size_t n) {
    v.resize(n);
    for (auto& x : v)
      x = static_cast<S>(bin::take_f32(in, path + " tensor data"));
  };
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const auto d_prev = static_cast<std::size_t>(dims[l]);
    const auto d = static_cast<std::size_t>(dims[l + 1]);
    LayerParams<S> lp;
    lp.w1 = Tensor2<S>(d, d_prev);
    take_tensor(lp.w1.data, d * d_prev);
    lp.w2 = Tensor2<S>(d, d);
    take_tensor(lp.w2.data, d * d);
    take_tensor(lp.a1, d);
    take_tensor(lp.a2, 2 * d);
    model.layers.push_back(std::move(lp));
  }
  const auto d_last = static_cast<std::size_t>(dims.back());
  model.wc = Tensor2<S>(static_cast<std::size_t>(classes), d_last);
  take_tensor(model.wc.data, static_cast<std::size_t>(classes) * d_last);
  take_tensor(model.bc, static_cast<std::size_t>(classes));
  ck.model = std::move(model);
  return ck;
}

}  // namespace hypergat
