#include "fewts/model.hpp"

#include <cmath>

#include "fewts/errors.hpp"
#include "fewts/serialize.hpp"
#include "json.hpp"

namespace fewts {

using nlohmann::json;

std::string ModelConfig::to_json() const {
  json j;
  j["hidden_fwd"] = hidden_fwd;
  j["hidden_bwd"] = hidden_bwd;
  j["hidden_query"] = hidden_query;
  j["k_a"] = k_a;
  j["k_v"] = k_v;
  j["head_hidden"] = head_hidden;
  j["dropout"] = dropout;
  j["scale_scores"] = scale_scores;
  j["include_t1"] = include_t1;
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& json_text) {
  ModelConfig c;
  json j;
  try {
    j = json::parse(json_text);
    c.hidden_fwd = j.at("hidden_fwd").get<std::size_t>();
    c.hidden_bwd = j.at("hidden_bwd").get<std::size_t>();
    c.hidden_query = j.at("hidden_query").get<std::size_t>();
    c.k_a = j.at("k_a").get<std::size_t>();
    c.k_v = j.at("k_v").get<std::size_t>();
    c.head_hidden = j.at("head_hidden").get<std::size_t>();
    c.dropout = j.at("dropout").get<double>();
    c.scale_scores = j.at("scale_scores").get<bool>();
    c.include_t1 = j.at("include_t1").get<bool>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  return c;
}

HeadParams HeadParams::init(std::size_t in_dim, std::size_t hidden, Rng& rng) {
  if (in_dim == 0 || hidden == 0) throw ConfigError("head: zero-sized layer");
  const double b1v = 1.0 / std::sqrt(static_cast<double>(in_dim));
  const double b2v = 1.0 / std::sqrt(static_cast<double>(hidden));
  HeadParams h;
  h.w1 = Tensor::uniform({hidden, in_dim}, -b1v, b1v, rng);
  h.b1 = Tensor::zeros({hidden}, /*requires_grad=*/true);
  h.w2 = Tensor::uniform({hidden, hidden}, -b2v, b2v, rng);
  h.b2 = Tensor::zeros({hidden}, /*requires_grad=*/true);
  h.w3 = Tensor::uniform({1, hidden}, -b2v, b2v, rng);
  h.b3 = Tensor::zeros({1}, /*requires_grad=*/true);
  return h;
}

void HeadParams::append_params(NamedParams& out, const std::string& prefix) const {
  out.push_back({prefix + ".w1", w1});
  out.push_back({prefix + ".b1", b1});
  out.push_back({prefix + ".w2", w2});
  out.push_back({prefix + ".b2", b2});
  out.push_back({prefix + ".w3", w3});
  out.push_back({prefix + ".b3", b3});
}

Tensor head_forward(const HeadParams& head, const Tensor& in, double dropout_rate,
                    Rng* dropout_rng) {
  Tensor x = in;
  if (dropout_rng && dropout_rate > 0.0) x = dropout(x, dropout_rate, *dropout_rng);
  Tensor h1 = relu(matmul(head.w1, x) + head.b1);
  if (dropout_rng && dropout_rate > 0.0) h1 = dropout(h1, dropout_rate, *dropout_rng);
  Tensor h2 = relu(matmul(head.w2, h1) + head.b2);
  return matmul(head.w3, h2) + head.b3;  // [1]
}

ModelParams ModelParams::init(const ModelConfig& cfg, Rng& rng) {
  ModelParams m;
  m.config = cfg;
  m.support_fwd = LstmParams::init(cfg.hidden_fwd, 1, rng);
  m.support_bwd = LstmParams::init(cfg.hidden_bwd, 1, rng);
  m.query_enc = LstmParams::init(cfg.hidden_query, 1, rng);
  m.attention = AttentionParams::init(cfg.k_a, cfg.k_v, cfg.hidden_query, cfg.k_h(), rng);
  m.head = HeadParams::init(cfg.k_v + cfg.hidden_query, cfg.head_hidden, rng);
  m.check();
  return m;
}

NamedParams ModelParams::parameters() const {
  NamedParams out;
  support_fwd.append_params(out, "support_fwd");
  support_bwd.append_params(out, "support_bwd");
  query_enc.append_params(out, "query_enc");
  attention.append_params(out, "attention");
  head.append_params(out, "head");
  return out;
}

std::size_t ModelParams::parameter_count() const { return param_count(parameters()); }

ModelParams ModelParams::clone() const {
  ModelParams c;
  c.config = config;
  c.support_fwd = {support_fwd.w_ih.clone_detached(), support_fwd.w_hh.clone_detached(),
                   support_fwd.b.clone_detached()};
  c.support_bwd = {support_bwd.w_ih.clone_detached(), support_bwd.w_hh.clone_detached(),
                   support_bwd.b.clone_detached()};
  c.query_enc = {query_enc.w_ih.clone_detached(), query_enc.w_hh.clone_detached(),
                 query_enc.b.clone_detached()};
  c.attention.q = attention.q.clone_detached();
  c.attention.k = attention.k.clone_detached();
  c.attention.v = attention.v.clone_detached();
  c.head.w1 = head.w1.clone_detached();
  c.head.b1 = head.b1.clone_detached();
  c.head.w2 = head.w2.clone_detached();
  c.head.b2 = head.b2.clone_detached();
  c.head.w3 = head.w3.clone_detached();
  c.head.b3 = head.b3.clone_detached();
  return c;
}

void ModelParams::check() const {
  support_fwd.check();
  support_bwd.check();
  query_enc.check();
  attention.check();
  if (support_fwd.hidden() != config.hidden_fwd || support_bwd.hidden() != config.hidden_bwd ||
      query_enc.hidden() != config.hidden_query) {
    throw DimensionError("model: encoder sizes disagree with config");
  }
  if (attention.k_h() != config.k_h() || attention.k_z() != config.hidden_query ||
      attention.k_a() != config.k_a || attention.k_v() != config.k_v) {
    throw DimensionError("model: attention sizes do not close the dimensional chain");
  }
  if (head.in_dim() != config.k_v + config.hidden_query) {
    throw DimensionError("model: head input size " + std::to_string(head.in_dim()) +
                         " != K_v+K_z = " + std::to_string(config.k_v + config.hidden_query));
  }
}

void ModelParams::save(const std::filesystem::path& path) const {
  save_params_file(path, "model", parameters(), config.to_json());
}

ModelParams ModelParams::load(const std::filesystem::path& path) {
  LoadedParams lp = load_params_file(path, "model");
  ModelConfig cfg = ModelConfig::from_json(lp.config_json);
  Rng scratch(0);
  ModelParams m = ModelParams::init(cfg, scratch);
  NamedParams target = m.parameters();
  assign_params(target, lp.params);
  return m;
}

void check_episode(const Episode& ep) {
  if (ep.support.empty()) throw DataError("episode: empty support set");
  if (ep.query.empty()) throw DataError("episode: empty query set");
  for (const auto& s : ep.support) {
    if (s.size() < 2) throw DataError("episode: support series shorter than 2");
  }
  for (const auto& q : ep.query) {
    if (q.size() < 2) throw DataError("episode: query series shorter than 2");
  }
}

EncodedSupport encode_support(const ModelParams& m,
                              const std::vector<std::vector<double>>& support) {
  if (support.empty()) throw EmptySupportError("encode_support: empty support set");
  EncodedSupport enc;
  for (std::size_t n = 0; n < support.size(); ++n) {
    if (support[n].empty()) throw DataError("encode_support: empty support series");
    std::vector<Tensor> states = encode_bidirectional(m.support_fwd, m.support_bwd, support[n]);
    for (std::size_t t = 0; t < states.size(); ++t) enc.push_back({n, t, states[t]});
  }
  return enc;
}

SupportContext build_support_context(const ModelParams& m,
                                     const std::vector<std::vector<double>>& support) {
  SupportContext ctx;
  ctx.enc = encode_support(m, support);
  ctx.proj = project_support(m.attention, ctx.enc);
  return ctx;
}

namespace {

Tensor predict_from_state(const ModelParams& m, const Tensor& z, const SupportContext& ctx,
                          Rng* dropout_rng) {
  AttentionConfig acfg{m.config.scale_scores};
  Tensor a = attend(ctx.proj, m.attention, z, acfg);
  return head_forward(m.head, concat({a, z}, 0), m.config.dropout, dropout_rng);
}

}  // namespace

Tensor forecast_next(const ModelParams& m, std::span<const double> prefix,
                     const SupportContext& ctx, Rng* dropout_rng) {
  if (prefix.empty()) throw DataError("forecast_next: empty prefix (need at least one value)");
  std::vector<Tensor> zs = encode_forward(m.query_enc, prefix);
  return predict_from_state(m, zs.back(), ctx, dropout_rng);
}

std::vector<Tensor> forecast_series_nodes(const ModelParams& m, std::span<const double> series,
                                          const SupportContext& ctx, Rng* dropout_rng) {
  if (series.size() < 2) throw DataError("forecast_series: series shorter than 2");
  std::vector<Tensor> out;
  if (m.config.include_t1) {
    out.push_back(predict_from_state(m, Tensor::zeros({m.config.hidden_query}), ctx, dropout_rng));
  }
  // One encoder pass gives z after every prefix x_1..x_t; the prediction
  // for position t+1 reads the state after t inputs.
  std::vector<Tensor> zs = encode_forward(m.query_enc, series.subspan(0, series.size() - 1));
  out.reserve(out.size() + zs.size());
  for (const Tensor& z : zs) out.push_back(predict_from_state(m, z, ctx, dropout_rng));
  return out;
}

Tensor forecast_series_graph(const ModelParams& m, std::span<const double> series,
                             const SupportContext& ctx, Rng* dropout_rng) {
  return concat(forecast_series_nodes(m, series, ctx, dropout_rng), 0);
}

std::vector<double> forecast_series(const ModelParams& m, std::span<const double> series,
                                    const SupportContext& ctx) {
  NoGradGuard no_grad;
  std::vector<Tensor> nodes = forecast_series_nodes(m, series, ctx, nullptr);
  std::vector<double> out;
  out.reserve(nodes.size());
  for (const Tensor& t : nodes) out.push_back(t.value());
  return out;
}

std::vector<double> forecast_targets(const ModelConfig& cfg, std::span<const double> series) {
  if (series.size() < 2) throw DataError("forecast_targets: series shorter than 2");
  const std::size_t start = cfg.include_t1 ? 0 : 1;
  return std::vector<double>(series.begin() + static_cast<std::ptrdiff_t>(start), series.end());
}

}  // namespace fewts
