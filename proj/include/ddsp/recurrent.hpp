#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ddsp/data_pipeline.hpp"
#include "ddsp/mdn.hpp"

namespace ddsp {

enum class CellType { Gru, Lstm };
enum class HeadKind { Mixture, Point };
enum class LossKind { MixtureNll, SquaredError, Constant };
enum class OptimizerKind { Momentum, Adam };

const char* to_string(CellType c);
const char* to_string(HeadKind h);
const char* to_string(OptimizerKind o);
CellType parse_cell_type(const std::string& s);
HeadKind parse_head_kind(const std::string& s);
OptimizerKind parse_optimizer(const std::string& s);

/// Output layout. Mixture: per zone [logits(K) | means(K) | std pre-activations(K)],
/// zones concatenated, then (if aux_point) one point output per zone.
/// Point: one output per zone.
struct HeadSpec {
    HeadKind kind = HeadKind::Mixture;
    std::size_t zones = 1;
    std::size_t components = 3;
    bool aux_point = false;

    std::size_t outputs() const;
};

struct ModelSpec {
    CellType cell = CellType::Gru;
    std::size_t input_size = 1;
    std::size_t hidden = 32;
    std::vector<std::size_t> dense = {256, 128};  // rectifier layers; an identity layer feeds the head
    std::size_t window = 10;
    HeadSpec head;
    double sigma_floor = kSigmaFloor;

    void validate() const;
};

struct TensorInfo {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t offset = 0;
    std::size_t size() const { return rows * cols; }
};

using ConstMat = Eigen::Map<const Eigen::MatrixXd>;
using ConstVec = Eigen::Map<const Eigen::VectorXd>;
using MutMat = Eigen::Map<Eigen::MatrixXd>;
using MutVec = Eigen::Map<Eigen::VectorXd>;

/// z = sig(W_z x + U_z h + b_z), r = sig(W_r x + U_r h + b_r),
/// h' = z * h + (1 - z) * tanh(W_h x + U_h (r * h) + b_h).
struct GruWeights {
    ConstMat W_z, U_z;
    ConstVec b_z;
    ConstMat W_r, U_r;
    ConstVec b_r;
    ConstMat W_h, U_h;
    ConstVec b_h;
};

struct LstmWeights {
    ConstMat W_i, U_i;
    ConstVec b_i;
    ConstMat W_f, U_f;
    ConstVec b_f;
    ConstMat W_o, U_o;
    ConstVec b_o;
    ConstMat W_g, U_g;
    ConstVec b_g;
};

struct GruStep {
    Eigen::VectorXd x, h_prev, z, r, candidate, h;
};

struct LstmStep {
    Eigen::VectorXd x, h_prev, c_prev, i, f, o, g, c, h;
};

GruStep gru_cell_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev, const GruWeights& w);
LstmStep lstm_cell_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev, const Eigen::VectorXd& c_prev,
                           const LstmWeights& w);

struct ForwardCache {
    std::vector<GruStep> gru;
    std::vector<LstmStep> lstm;
    std::vector<Eigen::VectorXd> layer_inputs;     // input of each dense layer
    std::vector<Eigen::VectorXd> pre_activations;  // before the rectifier
    Eigen::VectorXd output;
};

/// Recurrent cell + dense stack + head descriptor over one flat parameter
/// vector. Tensors are column-major slices of that vector.
class RecurrentModel {
public:
    RecurrentModel() = default;

    /// Recurrent and dense weights ~ U(-1/sqrt(fan), 1/sqrt(fan)) with fan = H
    /// for the cell and the layer input width for dense layers; biases 0.
    static RecurrentModel create(const ModelSpec& spec, std::uint64_t seed);
    /// Same layout with every parameter zero.
    static RecurrentModel zeros(const ModelSpec& spec);

    const ModelSpec& spec() const { return spec_; }
    const std::vector<TensorInfo>& tensors() const { return tensors_; }
    const TensorInfo& tensor(const std::string& name) const;
    std::span<double> parameters() { return params_; }
    std::span<const double> parameters() const { return params_; }
    std::size_t parameter_count() const { return params_.size(); }

    MutMat tensor_view(const std::string& name, std::span<double> storage) const;
    MutMat tensor_view(const std::string& name) { return tensor_view(name, params_); }

    GruWeights gru_weights() const;
    LstmWeights lstm_weights() const;

    /// Zero initial state, cells in time order, final hidden state through
    /// the dense stack. `window` is ws vectors of input_size.
    std::vector<double> forward(const std::vector<std::vector<double>>& window, ForwardCache* cache = nullptr) const;

    /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
    void backward(const ForwardCache& cache, std::span<const double> grad_output, std::span<double> grad) const;

private:
    void build_layout();
    std::size_t add_tensor(const std::string& name, std::size_t rows, std::size_t cols);
    ConstMat cmat(std::size_t id) const;
    ConstVec cvec(std::size_t id) const;

    ModelSpec spec_;
    std::vector<TensorInfo> tensors_;
    std::vector<double> params_;
    std::size_t cell_first_ = 0;
    std::vector<std::size_t> dense_w_, dense_b_;
};

struct HeadOutput {
    std::vector<GmmParams> mixtures;  // per zone, standardized units
    std::vector<double> point;        // per zone (Point head or aux outputs)
};

HeadOutput decode_head(const HeadSpec& head, std::span<const double> raw, double sigma_floor = kSigmaFloor);

LossKind default_loss(const HeadSpec& head);

/// Per-window loss. MixtureNll: sum over zones of -log p(target_z), plus
/// half squared error on aux outputs. SquaredError: half squared error
/// summed over zones. `grad_raw`, when non-empty, receives d(loss)/d(raw).
double head_loss(const HeadSpec& head, LossKind loss, std::span<const double> raw, std::span<const double> target,
                 std::span<double> grad_raw, double sigma_floor = kSigmaFloor);

/// Mean loss over the selected windows; gradient (mean) written into `grad`.
double batch_gradient(const RecurrentModel& model, const WindowSet& windows, std::span<const std::size_t> batch,
                      LossKind loss, std::span<double> grad);

double dataset_loss(const RecurrentModel& model, const WindowSet& windows, LossKind loss);

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t batch_size = 32;
    int epochs = 100;
    double clip_norm = 5.0;  // global norm; <= 0 disables
    std::uint64_t seed = 0;
    OptimizerKind optimizer = OptimizerKind::Momentum;
    double momentum = 0.9;

    void validate() const;
};

class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(int epoch, std::size_t batch, double loss);
    int epoch;
    std::size_t batch;
};

struct TrainResult {
    std::vector<double> history;  // mean training loss per epoch
};

/// Seeded per-epoch shuffle, mini-batch updates with global-norm clipping.
/// Throws TrainingDiverged on a non-finite batch loss.
TrainResult train(RecurrentModel& model, const WindowSet& windows, const TrainConfig& cfg, LossKind loss);

}  // namespace ddsp
