#include "ddsp/recurrent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ddsp/rng.hpp"

namespace ddsp {

namespace {

Eigen::VectorXd sigmoid(const Eigen::VectorXd& a) {
    Eigen::VectorXd out(a.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double x = a[i];
        if (x >= 0.0) {
            out[i] = 1.0 / (1.0 + std::exp(-x));
        } else {
            const double e = std::exp(x);
            out[i] = e / (1.0 + e);
        }
    }
    return out;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

constexpr const char* kGruNames[] = {"W_z", "U_z", "b_z", "W_r", "U_r", "b_r", "W_h", "U_h", "b_h"};
constexpr const char* kLstmNames[] = {"W_i", "U_i", "b_i", "W_f", "U_f", "b_f",
                                      "W_o", "U_o", "b_o", "W_g", "U_g", "b_g"};

}  // namespace

const char* to_string(CellType c) { return c == CellType::Gru ? "gru" : "lstm"; }
const char* to_string(HeadKind h) { return h == HeadKind::Mixture ? "mixture" : "point"; }
const char* to_string(OptimizerKind o) { return o == OptimizerKind::Momentum ? "momentum" : "adam"; }

CellType parse_cell_type(const std::string& s) {
    if (s == "gru") return CellType::Gru;
    if (s == "lstm") return CellType::Lstm;
    throw std::invalid_argument("unknown cell type '" + s + "' (expected gru|lstm)");
}

HeadKind parse_head_kind(const std::string& s) {
    if (s == "mixture") return HeadKind::Mixture;
    if (s == "point") return HeadKind::Point;
    throw std::invalid_argument("unknown head '" + s + "' (expected mixture|point)");
}

OptimizerKind parse_optimizer(const std::string& s) {
    if (s == "momentum" || s == "sgd") return OptimizerKind::Momentum;
    if (s == "adam") return OptimizerKind::Adam;
    throw std::invalid_argument("unknown optimizer '" + s + "' (expected momentum|adam)");
}

std::size_t HeadSpec::outputs() const {
    if (kind == HeadKind::Point) return zones;
    return zones * 3 * components + (aux_point ? zones : 0);
}

void ModelSpec::validate() const {
    if (input_size == 0) throw std::invalid_argument("model: input size must be >= 1");
    if (hidden == 0) throw std::invalid_argument("model: hidden size must be >= 1");
    if (window == 0) throw std::invalid_argument("model: window size must be >= 1");
    if (head.zones == 0) throw std::invalid_argument("model: head needs at least one zone");
    if (head.kind == HeadKind::Mixture && head.components == 0) {
        throw std::invalid_argument("model: mixture head needs K >= 1");
    }
    for (std::size_t d : dense) {
        if (d == 0) throw std::invalid_argument("model: dense layer width must be >= 1");
    }
    if (!(sigma_floor > 0.0)) throw std::invalid_argument("model: sigma floor must be positive");
}

std::size_t RecurrentModel::add_tensor(const std::string& name, std::size_t rows, std::size_t cols) {
    const std::size_t offset = tensors_.empty() ? 0 : tensors_.back().offset + tensors_.back().size();
    tensors_.push_back(TensorInfo{name, rows, cols, offset});
    return tensors_.size() - 1;
}

void RecurrentModel::build_layout() {
    spec_.validate();
    tensors_.clear();
    dense_w_.clear();
    dense_b_.clear();
    const std::size_t h = spec_.hidden;
    const std::size_t in = spec_.input_size;
    cell_first_ = 0;
    if (spec_.cell == CellType::Gru) {
        for (int g = 0; g < 3; ++g) {
            add_tensor(std::string("gru.") + kGruNames[3 * g], h, in);
            add_tensor(std::string("gru.") + kGruNames[3 * g + 1], h, h);
            add_tensor(std::string("gru.") + kGruNames[3 * g + 2], h, 1);
        }
    } else {
        for (int g = 0; g < 4; ++g) {
            add_tensor(std::string("lstm.") + kLstmNames[3 * g], h, in);
            add_tensor(std::string("lstm.") + kLstmNames[3 * g + 1], h, h);
            add_tensor(std::string("lstm.") + kLstmNames[3 * g + 2], h, 1);
        }
    }
    std::size_t width = h;
    for (std::size_t l = 0; l < spec_.dense.size(); ++l) {
        dense_w_.push_back(add_tensor("dense" + std::to_string(l) + ".W", spec_.dense[l], width));
        dense_b_.push_back(add_tensor("dense" + std::to_string(l) + ".b", spec_.dense[l], 1));
        width = spec_.dense[l];
    }
    dense_w_.push_back(add_tensor("out.W", spec_.head.outputs(), width));
    dense_b_.push_back(add_tensor("out.b", spec_.head.outputs(), 1));
    params_.assign(tensors_.back().offset + tensors_.back().size(), 0.0);
}

RecurrentModel RecurrentModel::zeros(const ModelSpec& spec) {
    RecurrentModel m;
    m.spec_ = spec;
    m.build_layout();
    return m;
}

RecurrentModel RecurrentModel::create(const ModelSpec& spec, std::uint64_t seed) {
    RecurrentModel m = zeros(spec);
    Rng rng(seed);
    const double cell_bound = 1.0 / std::sqrt(static_cast<double>(spec.hidden));
    const std::size_t n_cell = spec.cell == CellType::Gru ? 9 : 12;
    for (std::size_t t = 0; t < m.tensors_.size(); ++t) {
        const TensorInfo& info = m.tensors_[t];
        if (info.name.find(".b") != std::string::npos) continue;  // biases stay zero
        const double bound = t < n_cell ? cell_bound : 1.0 / std::sqrt(static_cast<double>(info.cols));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (std::size_t k = 0; k < info.size(); ++k) m.params_[info.offset + k] = u(rng);
    }
    return m;
}

const TensorInfo& RecurrentModel::tensor(const std::string& name) const {
    for (const auto& t : tensors_) {
        if (t.name == name) return t;
    }
    throw std::invalid_argument("model has no tensor '" + name + "'");
}

MutMat RecurrentModel::tensor_view(const std::string& name, std::span<double> storage) const {
    const TensorInfo& t = tensor(name);
    return MutMat(storage.data() + t.offset, static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(t.cols));
}

ConstMat RecurrentModel::cmat(std::size_t id) const {
    const TensorInfo& t = tensors_[id];
    return ConstMat(params_.data() + t.offset, static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(t.cols));
}

ConstVec RecurrentModel::cvec(std::size_t id) const {
    const TensorInfo& t = tensors_[id];
    return ConstVec(params_.data() + t.offset, static_cast<Eigen::Index>(t.size()));
}

GruWeights RecurrentModel::gru_weights() const {
    if (spec_.cell != CellType::Gru) throw std::logic_error("model is not a GRU");
    const std::size_t b = cell_first_;
    return GruWeights{cmat(b), cmat(b + 1), cvec(b + 2), cmat(b + 3), cmat(b + 4),
                      cvec(b + 5), cmat(b + 6), cmat(b + 7), cvec(b + 8)};
}

LstmWeights RecurrentModel::lstm_weights() const {
    if (spec_.cell != CellType::Lstm) throw std::logic_error("model is not an LSTM");
    const std::size_t b = cell_first_;
    return LstmWeights{cmat(b),     cmat(b + 1), cvec(b + 2),  cmat(b + 3), cmat(b + 4),  cvec(b + 5),
                       cmat(b + 6), cmat(b + 7), cvec(b + 8),  cmat(b + 9), cmat(b + 10), cvec(b + 11)};
}

GruStep gru_cell_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev, const GruWeights& w) {
    if (x.size() != w.W_z.cols() || h_prev.size() != w.U_z.rows()) {
        throw std::invalid_argument("gru_cell_forward: input or hidden size does not match the weights");
    }
    GruStep s;
    s.x = x;
    s.h_prev = h_prev;
    s.z = sigmoid(w.W_z * x + w.U_z * h_prev + w.b_z);
    s.r = sigmoid(w.W_r * x + w.U_r * h_prev + w.b_r);
    const Eigen::VectorXd gated = s.r.cwiseProduct(h_prev);
    s.candidate = (w.W_h * x + w.U_h * gated + w.b_h).array().tanh().matrix();
    s.h = s.z.cwiseProduct(h_prev) + (Eigen::VectorXd::Ones(h_prev.size()) - s.z).cwiseProduct(s.candidate);
    return s;
}

LstmStep lstm_cell_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev, const Eigen::VectorXd& c_prev,
                           const LstmWeights& w) {
    if (x.size() != w.W_i.cols() || h_prev.size() != w.U_i.rows() || c_prev.size() != h_prev.size()) {
        throw std::invalid_argument("lstm_cell_forward: input, hidden or cell size does not match the weights");
    }
    LstmStep s;
    s.x = x;
    s.h_prev = h_prev;
    s.c_prev = c_prev;
    s.i = sigmoid(w.W_i * x + w.U_i * h_prev + w.b_i);
    s.f = sigmoid(w.W_f * x + w.U_f * h_prev + w.b_f);
    s.o = sigmoid(w.W_o * x + w.U_o * h_prev + w.b_o);
    s.g = (w.W_g * x + w.U_g * h_prev + w.b_g).array().tanh().matrix();
    s.c = s.f.cwiseProduct(c_prev) + s.i.cwiseProduct(s.g);
    s.h = s.o.cwiseProduct(s.c.array().tanh().matrix());
    return s;
}

std::vector<double> RecurrentModel::forward(const std::vector<std::vector<double>>& window,
                                            ForwardCache* cache) const {
    if (window.size() != spec_.window) {
        throw std::invalid_argument("forward: window has " + std::to_string(window.size()) + " steps, model expects " +
                                    std::to_string(spec_.window));
    }
    const auto h_size = static_cast<Eigen::Index>(spec_.hidden);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(h_size);
    if (cache) *cache = ForwardCache{};

    if (spec_.cell == CellType::Gru) {
        const GruWeights w = gru_weights();
        for (const auto& step : window) {
            if (step.size() != spec_.input_size) throw std::invalid_argument("forward: input vector has wrong size");
            GruStep s = gru_cell_forward(to_vector(step), h, w);
            h = s.h;
            if (cache) cache->gru.push_back(std::move(s));
        }
    } else {
        const LstmWeights w = lstm_weights();
        Eigen::VectorXd c = Eigen::VectorXd::Zero(h_size);
        for (const auto& step : window) {
            if (step.size() != spec_.input_size) throw std::invalid_argument("forward: input vector has wrong size");
            LstmStep s = lstm_cell_forward(to_vector(step), h, c, w);
            h = s.h;
            c = s.c;
            if (cache) cache->lstm.push_back(std::move(s));
        }
    }

    Eigen::VectorXd act = h;
    const std::size_t layers = dense_w_.size();
    for (std::size_t l = 0; l < layers; ++l) {
        Eigen::VectorXd pre = cmat(dense_w_[l]) * act + cvec(dense_b_[l]);
        if (cache) {
            cache->layer_inputs.push_back(act);
            cache->pre_activations.push_back(pre);
        }
        act = l + 1 < layers ? pre.cwiseMax(0.0) : pre;
    }
    if (cache) cache->output = act;
    return std::vector<double>(act.data(), act.data() + act.size());
}

void RecurrentModel::backward(const ForwardCache& cache, std::span<const double> grad_output,
                              std::span<double> grad) const {
    if (grad.size() != params_.size()) throw std::invalid_argument("backward: gradient buffer has wrong size");
    if (grad_output.size() != spec_.head.outputs()) throw std::invalid_argument("backward: output gradient has wrong size");
    auto gmat = [&](std::size_t id) {
        const TensorInfo& t = tensors_[id];
        return MutMat(grad.data() + t.offset, static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(t.cols));
    };
    auto gvec = [&](std::size_t id) {
        const TensorInfo& t = tensors_[id];
        return MutVec(grad.data() + t.offset, static_cast<Eigen::Index>(t.size()));
    };

    Eigen::VectorXd g = ConstVec(grad_output.data(), static_cast<Eigen::Index>(grad_output.size()));
    for (std::size_t l = dense_w_.size(); l-- > 0;) {
        Eigen::VectorXd dpre = g;
        if (l + 1 < dense_w_.size()) {
            const Eigen::VectorXd& pre = cache.pre_activations[l];
            for (Eigen::Index k = 0; k < dpre.size(); ++k) {
                if (pre[k] <= 0.0) dpre[k] = 0.0;
            }
        }
        gmat(dense_w_[l]).noalias() += dpre * cache.layer_inputs[l].transpose();
        gvec(dense_b_[l]) += dpre;
        g = cmat(dense_w_[l]).transpose() * dpre;
    }

    const std::size_t b = cell_first_;
    Eigen::VectorXd dh = g;
    if (spec_.cell == CellType::Gru) {
        const GruWeights w = gru_weights();
        for (std::size_t t = cache.gru.size(); t-- > 0;) {
            const GruStep& s = cache.gru[t];
            const Eigen::VectorXd one = Eigen::VectorXd::Ones(s.z.size());
            const Eigen::VectorXd da_z =
                dh.cwiseProduct(s.h_prev - s.candidate).cwiseProduct(s.z.cwiseProduct(one - s.z));
            const Eigen::VectorXd da_h =
                dh.cwiseProduct(one - s.z).cwiseProduct(one - s.candidate.cwiseProduct(s.candidate));
            const Eigen::VectorXd gated = s.r.cwiseProduct(s.h_prev);
            const Eigen::VectorXd d_gated = w.U_h.transpose() * da_h;
            const Eigen::VectorXd da_r = d_gated.cwiseProduct(s.h_prev).cwiseProduct(s.r.cwiseProduct(one - s.r));

            gmat(b + 0).noalias() += da_z * s.x.transpose();
            gmat(b + 1).noalias() += da_z * s.h_prev.transpose();
            gvec(b + 2) += da_z;
            gmat(b + 3).noalias() += da_r * s.x.transpose();
            gmat(b + 4).noalias() += da_r * s.h_prev.transpose();
            gvec(b + 5) += da_r;
            gmat(b + 6).noalias() += da_h * s.x.transpose();
            gmat(b + 7).noalias() += da_h * gated.transpose();
            gvec(b + 8) += da_h;

            dh = dh.cwiseProduct(s.z) + d_gated.cwiseProduct(s.r) + w.U_z.transpose() * da_z +
                 w.U_r.transpose() * da_r;
        }
    } else {
        const LstmWeights w = lstm_weights();
        Eigen::VectorXd dc = Eigen::VectorXd::Zero(dh.size());
        for (std::size_t t = cache.lstm.size(); t-- > 0;) {
            const LstmStep& s = cache.lstm[t];
            const Eigen::VectorXd one = Eigen::VectorXd::Ones(s.c.size());
            const Eigen::VectorXd tc = s.c.array().tanh().matrix();
            dc += dh.cwiseProduct(s.o).cwiseProduct(one - tc.cwiseProduct(tc));
            const Eigen::VectorXd da_o = dh.cwiseProduct(tc).cwiseProduct(s.o.cwiseProduct(one - s.o));
            const Eigen::VectorXd da_i = dc.cwiseProduct(s.g).cwiseProduct(s.i.cwiseProduct(one - s.i));
            const Eigen::VectorXd da_f = dc.cwiseProduct(s.c_prev).cwiseProduct(s.f.cwiseProduct(one - s.f));
            const Eigen::VectorXd da_g = dc.cwiseProduct(s.i).cwiseProduct(one - s.g.cwiseProduct(s.g));

            const Eigen::VectorXd* gates[4] = {&da_i, &da_f, &da_o, &da_g};
            for (std::size_t k = 0; k < 4; ++k) {
                gmat(b + 3 * k).noalias() += *gates[k] * s.x.transpose();
                gmat(b + 3 * k + 1).noalias() += *gates[k] * s.h_prev.transpose();
                gvec(b + 3 * k + 2) += *gates[k];
            }
            dh = w.U_i.transpose() * da_i + w.U_f.transpose() * da_f + w.U_o.transpose() * da_o +
                 w.U_g.transpose() * da_g;
            dc = dc.cwiseProduct(s.f);
        }
    }
}

HeadOutput decode_head(const HeadSpec& head, std::span<const double> raw, double sigma_floor) {
    if (raw.size() != head.outputs()) throw std::invalid_argument("decode_head: raw output has wrong size");
    HeadOutput out;
    if (head.kind == HeadKind::Point) {
        out.point.assign(raw.begin(), raw.end());
        return out;
    }
    const std::size_t k3 = 3 * head.components;
    for (std::size_t z = 0; z < head.zones; ++z) {
        out.mixtures.push_back(mdn_transform(raw.subspan(z * k3, k3), head.components, sigma_floor));
    }
    if (head.aux_point) {
        const auto aux = raw.subspan(head.zones * k3, head.zones);
        out.point.assign(aux.begin(), aux.end());
    } else {
        for (const auto& m : out.mixtures) out.point.push_back(m.mean());
    }
    return out;
}

LossKind default_loss(const HeadSpec& head) {
    return head.kind == HeadKind::Mixture ? LossKind::MixtureNll : LossKind::SquaredError;
}

double head_loss(const HeadSpec& head, LossKind loss, std::span<const double> raw, std::span<const double> target,
                 std::span<double> grad_raw, double sigma_floor) {
    if (raw.size() != head.outputs()) throw std::invalid_argument("head_loss: raw output has wrong size");
    if (target.size() != head.zones) throw std::invalid_argument("head_loss: target has wrong size");
    const bool want_grad = !grad_raw.empty();
    if (want_grad) {
        if (grad_raw.size() != raw.size()) throw std::invalid_argument("head_loss: gradient buffer has wrong size");
        std::fill(grad_raw.begin(), grad_raw.end(), 0.0);
    }
    switch (loss) {
        case LossKind::Constant:
            return 0.0;
        case LossKind::SquaredError: {
            if (head.kind != HeadKind::Point) throw std::invalid_argument("squared-error loss needs a point head");
            double l = 0.0;
            for (std::size_t z = 0; z < head.zones; ++z) {
                const double e = raw[z] - target[z];
                l += 0.5 * e * e;
                if (want_grad) grad_raw[z] = e;
            }
            return l;
        }
        case LossKind::MixtureNll: {
            if (head.kind != HeadKind::Mixture) throw std::invalid_argument("mixture NLL needs a mixture head");
            const std::size_t k = head.components;
            double l = 0.0;
            for (std::size_t z = 0; z < head.zones; ++z) {
                const auto slice = raw.subspan(z * 3 * k, 3 * k);
                const GmmParams p = mdn_transform(slice, k, sigma_floor);
                l -= gmm_log_pdf(target[z], p);
                if (want_grad) gmm_nll_raw_gradient(target[z], p, slice, grad_raw.subspan(z * 3 * k, 3 * k));
            }
            if (head.aux_point) {
                const std::size_t base = head.zones * 3 * k;
                for (std::size_t z = 0; z < head.zones; ++z) {
                    const double e = raw[base + z] - target[z];
                    l += 0.5 * e * e;
                    if (want_grad) grad_raw[base + z] = e;
                }
            }
            return l;
        }
    }
    return 0.0;
}

double batch_gradient(const RecurrentModel& model, const WindowSet& windows, std::span<const std::size_t> batch,
                      LossKind loss, std::span<double> grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    if (batch.empty()) return 0.0;
    const HeadSpec& head = model.spec().head;
    std::vector<double> grad_raw(head.outputs());
    ForwardCache cache;
    double total = 0.0;
    for (std::size_t idx : batch) {
        const Window& w = windows.pairs.at(idx);
        const std::vector<double> raw = model.forward(w.inputs, &cache);
        total += head_loss(head, loss, raw, w.target, grad_raw, model.spec().sigma_floor);
        if (loss != LossKind::Constant) model.backward(cache, grad_raw, grad);
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& g : grad) g *= inv;
    return total * inv;
}

double dataset_loss(const RecurrentModel& model, const WindowSet& windows, LossKind loss) {
    if (windows.size() == 0) return 0.0;
    double total = 0.0;
    for (const Window& w : windows.pairs) {
        const std::vector<double> raw = model.forward(w.inputs);
        total += head_loss(model.spec().head, loss, raw, w.target, {}, model.spec().sigma_floor);
    }
    return total / static_cast<double>(windows.size());
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("train: learning rate must be finite and >= 0");
    }
    if (batch_size == 0) throw std::invalid_argument("train: batch size must be >= 1");
    if (epochs < 0) throw std::invalid_argument("train: epoch count must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("train: momentum must lie in [0, 1)");
}

TrainingDiverged::TrainingDiverged(int e, std::size_t b, double loss)
    : std::runtime_error("training diverged: non-finite loss (" + std::to_string(loss) + ") at epoch " +
                         std::to_string(e) + ", batch " + std::to_string(b)),
      epoch(e),
      batch(b) {}

TrainResult train(RecurrentModel& model, const WindowSet& windows, const TrainConfig& cfg, LossKind loss) {
    cfg.validate();
    if (windows.size() == 0) throw std::invalid_argument("train: empty window set");
    if (windows.window != model.spec().window) throw std::invalid_argument("train: window size differs from model");

    const std::size_t n_params = model.parameter_count();
    std::vector<double> grad(n_params);
    std::vector<double> m1(n_params, 0.0);
    std::vector<double> m2(n_params, 0.0);
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;
    long step = 0;

    Rng rng(cfg.seed);
    std::vector<std::size_t> order(windows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    auto params = model.parameters();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_total = 0.0;
        std::size_t batch_no = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_no) {
            const std::size_t end = std::min(start + cfg.batch_size, order.size());
            const std::span<const std::size_t> batch(order.data() + start, end - start);
            const double l = batch_gradient(model, windows, batch, loss, grad);
            if (!std::isfinite(l)) throw TrainingDiverged(epoch, batch_no, l);
            epoch_total += l * static_cast<double>(batch.size());

            if (cfg.clip_norm > 0.0) {
                double sq = 0.0;
                for (double g : grad) sq += g * g;
                const double norm = std::sqrt(sq);
                if (!std::isfinite(norm)) throw TrainingDiverged(epoch, batch_no, norm);
                if (norm > cfg.clip_norm) {
                    const double s = cfg.clip_norm / norm;
                    for (double& g : grad) g *= s;
                }
            }
            ++step;
            if (cfg.optimizer == OptimizerKind::Momentum) {
                for (std::size_t k = 0; k < n_params; ++k) {
                    m1[k] = cfg.momentum * m1[k] - cfg.learning_rate * grad[k];
                    params[k] += m1[k];
                }
            } else {
                const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
                const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
                for (std::size_t k = 0; k < n_params; ++k) {
                    m1[k] = beta1 * m1[k] + (1.0 - beta1) * grad[k];
                    m2[k] = beta2 * m2[k] + (1.0 - beta2) * grad[k] * grad[k];
                    params[k] -= cfg.learning_rate * (m1[k] / c1) / (std::sqrt(m2[k] / c2) + eps);
                }
            }
            for (double p : params) {
                if (!std::isfinite(p)) throw TrainingDiverged(epoch, batch_no, p);
            }
        }
        result.history.push_back(epoch_total / static_cast<double>(order.size()));
    }
    return result;
}

}  // namespace ddsp
