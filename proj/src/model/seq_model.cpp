#include "mgcrnn/model/seq_model.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mgcrnn/core/errors.hpp"

namespace mgcrnn {

LstmCell::LstmCell(std::string prefix, std::size_t input, std::size_t hidden, ParameterSet& params, Rng& rng)
    : prefix_(std::move(prefix)), input_(input), hidden_(hidden) {
  const std::size_t g = 4 * hidden;
  params.add(prefix_ + ".kernel", glorot_uniform(input, g, input, g, rng));
  params.add(prefix_ + ".recurrent", glorot_uniform(hidden, g, hidden, g, rng));
  Matrix bias(1, g);
  for (std::size_t j = hidden; j < 2 * hidden; ++j) bias(0, j) = 1.0;  // forget gate
  params.add(prefix_ + ".bias", std::move(bias));
}

LstmCell::Vars LstmCell::bind(Tape& tape, ParameterSet& params) const {
  return {tape.parameter(params.at(prefix_ + ".kernel")), tape.parameter(params.at(prefix_ + ".recurrent")),
          tape.parameter(params.at(prefix_ + ".bias"))};
}

LstmState lstm_step(Tape& tape, const LstmCell::Vars& cell, std::size_t hidden, Var x, LstmState state,
                    const Matrix& input_mask, const Matrix& recurrent_mask) {
  const Var xin = input_mask.empty() ? x : tape.mask(x, input_mask);
  const Var hin = recurrent_mask.empty() ? state.h : tape.mask(state.h, recurrent_mask);
  const Var z = tape.add_row(tape.add(tape.matmul(xin, cell.kernel), tape.matmul(hin, cell.recurrent)), cell.bias);
  const Var i = tape.sigmoid(tape.slice_cols(z, 0, hidden));
  const Var f = tape.sigmoid(tape.slice_cols(z, hidden, hidden));
  const Var g = tape.tanh(tape.slice_cols(z, 2 * hidden, hidden));
  const Var o = tape.sigmoid(tape.slice_cols(z, 3 * hidden, hidden));
  const Var c = tape.add(tape.hadamard(f, state.c), tape.hadamard(i, g));
  return {tape.hadamard(o, tape.tanh(c)), c};
}

namespace {

void check_finite(const Tape& tape, Var h, const char* stage, std::size_t step) {
  if (!all_finite(tape.value(h)))
    throw NumericError(std::string(stage) + " step " + std::to_string(step + 1) +
                       " produced a non-finite hidden state");
}

}  // namespace

LstmState encode(Tape& tape, const LstmCell::Vars& cell, std::size_t hidden, std::span<const Var> xs) {
  if (xs.empty()) throw ContractError("encode: empty input sequence");
  const std::size_t batch = tape.value(xs[0]).rows();
  LstmState s{tape.constant(Matrix(batch, hidden)), tape.constant(Matrix(batch, hidden))};
  for (std::size_t t = 0; t < xs.size(); ++t) {
    s = lstm_step(tape, cell, hidden, xs[t], s);
    check_finite(tape, s.h, "encoder", t);
  }
  return s;
}

std::vector<Var> decode(Tape& tape, const LstmCell::Vars& cell, std::size_t hidden, LstmState representation,
                        std::size_t p, const Matrix& input_mask, const Matrix& recurrent_mask) {
  if (p == 0) throw ContractError("decode: horizon must be at least 1");
  std::vector<Var> out;
  LstmState s = representation;
  for (std::size_t j = 0; j < p; ++j) {
    s = lstm_step(tape, cell, hidden, representation.h, s, input_mask, recurrent_mask);
    check_finite(tape, s.h, "decoder", j);
    out.push_back(s.h);
  }
  return out;
}

Var time_distributed_output(Tape& tape, const DenseVars& interp, const DenseVars& out,
                            std::span<const Var> hiddens) {
  const Var stacked = hiddens.size() == 1 ? hiddens[0] : tape.concat_rows(hiddens);
  const Var mid = tape.relu(tape.add_row(tape.matmul(stacked, interp.w), interp.b));
  return tape.add_row(tape.matmul(mid, out.w), out.b);
}

Var exogenous_offsets(Tape& tape, const ExogenousVars& vars, std::span<const int> day_of_week,
                      std::span<const int> holiday) {
  if (day_of_week.size() != holiday.size())
    throw DimensionError("exogenous_offsets: " + std::to_string(day_of_week.size()) + " day codes, " +
                         std::to_string(holiday.size()) + " holiday flags");
  const std::size_t n = day_of_week.size();
  Matrix dow(n, 7), hol(n, 2);
  for (std::size_t r = 0; r < n; ++r) {
    if (day_of_week[r] < 1 || day_of_week[r] > 7)
      throw IndexError("exogenous_offsets: day-of-week code " + std::to_string(day_of_week[r]) +
                       " outside 1..7");
    if (holiday[r] != 0 && holiday[r] != 1)
      throw IndexError("exogenous_offsets: holiday flag " + std::to_string(holiday[r]) + " is not 0 or 1");
    dow(r, static_cast<std::size_t>(day_of_week[r] - 1)) = 1.0;
    hol(r, static_cast<std::size_t>(holiday[r])) = 1.0;
  }
  const Var d = tape.matmul(tape.matmul(tape.constant(std::move(dow)), vars.dow_embed), vars.dow_dense);
  const Var h = tape.matmul(tape.matmul(tape.constant(std::move(hol)), vars.holiday_embed), vars.holiday_dense);
  return tape.add(d, h);
}

void ModelConfig::validate() const {
  if (stations == 0 || channels == 0 || input_len == 0 || horizon == 0 || gcn_units == 0 || gcn_depth == 0 ||
      lstm_units == 0 || embed_dim == 0)
    throw ConfigError("model config: every size must be positive");
  if (mask.empty()) throw ConfigError("model config: graph mask selects no graph");
  if (dropout < 0.0 || dropout >= 1.0 || recurrent_dropout < 0.0 || recurrent_dropout >= 1.0)
    throw ConfigError("model config: dropout rates must lie in [0, 1)");
}

std::string ModelConfig::shape_signature() const {
  std::ostringstream s;
  s << "stations=" << stations << ";channels=" << channels << ";l=" << input_len << ";p=" << horizon
    << ";U=" << gcn_units << ";depth=" << gcn_depth << ";H=" << lstm_units << ";E=" << embed_dim
    << ";mask=" << mask.to_string() << ";exogenous=" << (exogenous ? 1 : 0);
  return s.str();
}

std::uint64_t ModelConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : shape_signature()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

MgcRnn::MgcRnn(ModelConfig config, std::uint64_t seed)
    : config_((config.validate(), config)),
      mgc_([&] {
        Rng rng = Rng(seed).split("mgc");
        return MgcLayer({config_.stations, config_.channels, config_.gcn_units, config_.gcn_depth, config_.mask},
                        params_, rng);
      }()),
      encoder_([&] {
        Rng rng = Rng(seed).split("encoder");
        return LstmCell("enc", config_.outputs(), config_.lstm_units, params_, rng);
      }()),
      decoder_([&] {
        Rng rng = Rng(seed).split("decoder");
        return LstmCell("dec", config_.lstm_units, config_.lstm_units, params_, rng);
      }()) {
  Rng rng = Rng(seed).split("dense");
  const std::size_t h = config_.lstm_units, out = config_.outputs(), e = config_.embed_dim;
  params_.add("interp.w", glorot_uniform(h, h, rng));
  params_.add("interp.b", Matrix(1, h));
  params_.add("out.w", glorot_uniform(h, out, rng));
  params_.add("out.b", Matrix(1, out));
  if (config_.exogenous) {
    Rng erng = Rng(seed).split("exogenous");
    params_.add("exo.dow.embed", glorot_uniform(7, e, erng));
    params_.add("exo.holiday.embed", glorot_uniform(2, e, erng));
    params_.add("exo.dow.dense", glorot_uniform(e, out, erng));
    params_.add("exo.holiday.dense", glorot_uniform(e, out, erng));
  }
}

Var MgcRnn::forward(Tape& tape, const ModelBatch& batch, Rng* dropout_rng) {
  const std::size_t b = batch.size, l = config_.input_len, p = config_.horizon, h = config_.lstm_units;
  if (b == 0 || batch.graphs.blocks != l * b)
    throw DimensionError("model forward: batch of " + std::to_string(b) + " windows needs " +
                         std::to_string(l * b) + " graph blocks, got " + std::to_string(batch.graphs.blocks));
  const Var x = mgc_.forward(tape, params_, batch.graphs);
  std::vector<Var> xs;
  xs.reserve(l);
  for (std::size_t t = 0; t < l; ++t) xs.push_back(l == 1 ? x : tape.slice_rows(x, t * b, b));

  const LstmState rep = encode(tape, encoder_.bind(tape, params_), h, xs);
  Matrix in_mask, rec_mask;
  if (dropout_rng != nullptr) {
    if (config_.dropout > 0.0) in_mask = dropout_mask(b, h, config_.dropout, *dropout_rng);
    if (config_.recurrent_dropout > 0.0) rec_mask = dropout_mask(b, h, config_.recurrent_dropout, *dropout_rng);
  }
  const auto hiddens = decode(tape, decoder_.bind(tape, params_), h, rep, p, in_mask, rec_mask);

  const DenseVars interp{tape.parameter(params_.at("interp.w")), tape.parameter(params_.at("interp.b"))};
  const DenseVars out{tape.parameter(params_.at("out.w")), tape.parameter(params_.at("out.b"))};
  Var y = time_distributed_output(tape, interp, out, hiddens);
  if (config_.exogenous) {
    if (batch.day_of_week.size() != p * b || batch.holiday.size() != p * b)
      throw DimensionError("model forward: exogenous codes must cover every target step of every window");
    const ExogenousVars ev{tape.parameter(params_.at("exo.dow.embed")),
                           tape.parameter(params_.at("exo.holiday.embed")),
                           tape.parameter(params_.at("exo.dow.dense")),
                           tape.parameter(params_.at("exo.holiday.dense"))};
    y = tape.add(y, exogenous_offsets(tape, ev, batch.day_of_week, batch.holiday));
  }
  return y;
}

Matrix MgcRnn::predict(const ModelBatch& batch) {
  Tape tape;
  return tape.value(forward(tape, batch));
}

namespace {

constexpr int kCheckpointVersion = 1;

nlohmann::json tensor_json(const std::string& name, const Matrix& m) {
  return {{"name", name}, {"rows", m.rows()}, {"cols", m.cols()},
          {"values", std::vector<double>(m.values().begin(), m.values().end())}};
}

Matrix tensor_from_json(const nlohmann::json& j) {
  return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                j.at("values").get<std::vector<double>>());
}

nlohmann::json config_json(const ModelConfig& c) {
  return {{"stations", c.stations},   {"channels", c.channels},     {"input_len", c.input_len},
          {"horizon", c.horizon},     {"gcn_units", c.gcn_units},   {"gcn_depth", c.gcn_depth},
          {"lstm_units", c.lstm_units}, {"embed_dim", c.embed_dim}, {"mask", c.mask.to_string()},
          {"exogenous", c.exogenous}, {"dropout", c.dropout},       {"recurrent_dropout", c.recurrent_dropout}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.stations = j.at("stations").get<std::size_t>();
  c.channels = j.at("channels").get<std::size_t>();
  c.input_len = j.at("input_len").get<std::size_t>();
  c.horizon = j.at("horizon").get<std::size_t>();
  c.gcn_units = j.at("gcn_units").get<std::size_t>();
  c.gcn_depth = j.at("gcn_depth").get<std::size_t>();
  c.lstm_units = j.at("lstm_units").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.mask = graph::GraphMask::parse(j.at("mask").get<std::string>());
  c.exogenous = j.at("exogenous").get<bool>();
  c.dropout = j.at("dropout").get<double>();
  c.recurrent_dropout = j.at("recurrent_dropout").get<double>();
  return c;
}

std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << v;
  return s.str();
}

}  // namespace

void save_checkpoint(const MgcRnn& model, const std::filesystem::path& path, const AdamState* adam) {
  nlohmann::json j;
  j["format"] = "mgcrnn-checkpoint";
  j["version"] = kCheckpointVersion;
  j["config"] = config_json(model.config());
  j["config_hash"] = hex(model.config().hash());
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& p : model.params()) tensors.push_back(tensor_json(p.name, p.value));
  j["tensors"] = std::move(tensors);
  if (adam != nullptr) {
    nlohmann::json a;
    a["t"] = adam->t;
    a["beta1"] = adam->hyper.beta1;
    a["beta2"] = adam->hyper.beta2;
    a["epsilon"] = adam->hyper.epsilon;
    nlohmann::json m = nlohmann::json::array(), v = nlohmann::json::array();
    for (std::size_t i = 0; i < adam->m.size(); ++i) {
      m.push_back(tensor_json(model.params()[i].name, adam->m[i]));
      v.push_back(tensor_json(model.params()[i].name, adam->v[i]));
    }
    a["m"] = std::move(m);
    a["v"] = std::move(v);
    j["adam"] = std::move(a);
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint '" + path.string() + "'");
  out << j.dump();
  if (!out) throw DataError("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint '" + path.string() + "': " + e.what());
  }
  if (j.value("format", "") != "mgcrnn-checkpoint")
    throw DataError("'" + path.string() + "' is not an mgcrnn checkpoint");
  const int version = j.value("version", 0);
  if (version != kCheckpointVersion)
    throw ConfigError("checkpoint '" + path.string() + "' has version " + std::to_string(version) +
                      ", this build reads version " + std::to_string(kCheckpointVersion));
  Checkpoint ck;
  ck.config = config_from_json(j.at("config"));
  if (j.at("config_hash").get<std::string>() != hex(ck.config.hash()))
    throw DataError("checkpoint '" + path.string() + "': stored config hash does not match its config");
  for (const auto& t : j.at("tensors")) ck.params.add(t.at("name").get<std::string>(), tensor_from_json(t));
  if (j.contains("adam")) {
    const auto& a = j.at("adam");
    AdamState st;
    st.t = a.at("t").get<std::uint64_t>();
    st.hyper.beta1 = a.at("beta1").get<double>();
    st.hyper.beta2 = a.at("beta2").get<double>();
    st.hyper.epsilon = a.at("epsilon").get<double>();
    for (const auto& m : a.at("m")) st.m.push_back(tensor_from_json(m));
    for (const auto& v : a.at("v")) st.v.push_back(tensor_from_json(v));
    ck.adam = std::move(st);
  }
  return ck;
}

void load_checkpoint(MgcRnn& model, const std::filesystem::path& path, AdamState* adam) {
  Checkpoint ck = read_checkpoint(path);
  if (ck.config.hash() != model.config().hash())
    throw ConfigError("checkpoint '" + path.string() + "' was trained with [" + ck.config.shape_signature() +
                      "] but the current config is [" + model.config().shape_signature() + "]");
  ParameterSet& params = model.params();
  if (ck.params.size() != params.size())
    throw ConfigError("checkpoint '" + path.string() + "' holds " + std::to_string(ck.params.size()) +
                      " tensors, model has " + std::to_string(params.size()));
  for (auto& p : params) {
    const Parameter* src = ck.params.find(p.name);
    if (src == nullptr) throw ConfigError("checkpoint '" + path.string() + "' lacks tensor " + p.name);
    if (!src->value.same_shape(p.value))
      throw ConfigError("checkpoint tensor " + p.name + " is " + src->value.shape_string() + ", model expects " +
                        p.value.shape_string());
  }
  for (auto& p : params) p.value = ck.params.at(p.name).value;
  if (adam != nullptr && ck.adam) *adam = std::move(*ck.adam);
}

}  // namespace mgcrnn
