#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "umesh/linalg.hpp"

namespace umesh {

/// Flat vector of phase shifts in radians. Layout is layer-major: all phases
/// of layer 1, then layer 2, ... For an MZI the order is theta then phi.
/// Values are unconstrained reals (phases wrap through e^{i theta}).
using ParameterVector = Eigen::VectorXd;

/// Linear coupling between neighboring phase shifters within one array:
/// theta'_i = sum_k c_k * theta_{i+k}, truncated at the array edges.
class CrosstalkModel {
public:
  struct Tap {
    int offset;
    double coefficient;
  };

  /// Validates: offsets distinct, coefficient 1.0 at offset 0, and the
  /// induced banded map invertible (|det| > 0) for array sizes 1..64.
  explicit CrosstalkModel(std::vector<Tap> kernel);

  /// The thermal-coupling kernel used throughout the experiments:
  /// {(-2, 0.1), (-1, 0.5), (0, 1.0), (+1, 0.5), (+2, 0.1)}.
  static CrosstalkModel neighbor_default();

  const std::vector<Tap>& kernel() const noexcept { return kernel_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& phases) const;
  /// Transpose map K^T g, the chain rule for gradients through apply().
  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& g) const;

  /// Dense matrix K with K theta = theta' for an array of length n.
  Eigen::MatrixXd banded_matrix(Eigen::Index n) const;

  /// Throws InvariantViolation when |det K_n| is zero or non-finite.
  void check_invertible(Eigen::Index n) const;

  bool operator==(const CrosstalkModel& other) const;

private:
  std::vector<Tap> kernel_;
};

/// theta'_i = sum of kernel coefficients times in-range neighbors.
Eigen::VectorXd apply_crosstalk(const Eigen::VectorXd& phases, const CrosstalkModel& model);

/// Transfer matrix of one MZI: phase phi on the upper input arm, a 50:50
/// beam splitter, phase theta on the upper internal arm, a second 50:50
/// beam splitter. The splitter is fixed as (1/sqrt(2)) [[1, i], [i, 1]].
Eigen::Matrix2cd mzi_transfer(double theta, double phi);
Eigen::Matrix2cd mzi_transfer_dtheta(double theta, double phi);
Eigen::Matrix2cd mzi_transfer_dphi(double theta, double phi);

/// One multiplicative factor of the device transfer matrix. Stages are
/// listed input-to-output, so X = M_{S-1} * ... * M_1 * M_0.
struct Stage {
  enum class Kind { Mixer, PhaseArray, MziLayer };

  Kind kind;
  int mixer_index = -1;           // Mixer
  Eigen::Index param_offset = 0;  // PhaseArray, MziLayer
  Eigen::Index param_count = 0;   // PhaseArray: n_modes; MziLayer: 2 * n_mzi
  Eigen::Index first_mode = 0;    // MziLayer: 0 for odd layers, 1 for even
  Eigen::Index n_mzi = 0;         // MziLayer

  bool parameterized() const { return kind != Kind::Mixer; }
};

/// Seeds the mixers of a sampled device were drawn from; kept for replay.
struct RngProvenance {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

/// Immutable architecture description. Forward evaluation is pure; one
/// device may be shared by concurrent trial workers.
class Device {
public:
  virtual ~Device() = default;

  Eigen::Index n_modes() const noexcept { return n_modes_; }
  Eigen::Index n_layers() const noexcept { return n_layers_; }
  Eigen::Index param_count() const noexcept { return param_count_; }
  virtual Eigen::Index dof_count() const = 0;
  virtual std::string kind() const = 0;
  virtual std::unique_ptr<Device> clone() const = 0;

  const std::optional<CrosstalkModel>& crosstalk() const noexcept { return crosstalk_; }
  const std::optional<RngProvenance>& provenance() const noexcept { return provenance_; }

  const std::vector<Stage>& stages() const noexcept { return stages_; }
  /// Parameter-index groups, one per physical phase-shifter array; the
  /// crosstalk kernel acts within each group independently.
  const std::vector<std::vector<Eigen::Index>>& shifter_arrays() const noexcept {
    return shifter_arrays_;
  }
  const ComplexMatrix& mixer(int index) const;
  int mixer_count() const noexcept { return static_cast<int>(mixers_.size()); }

  /// Crosstalk-transformed phases theta'; a plain copy when no crosstalk.
  ParameterVector effective_phases(const ParameterVector& p) const;
  /// Pulls a gradient w.r.t. effective phases back to raw parameters (K^T).
  ParameterVector pullback_phase_gradient(const ParameterVector& g) const;

  UnitaryMatrix forward(const ParameterVector& p) const;

  /// Reusable buffers for repeated forward evaluations on one thread.
  struct Workspace {
    ComplexMatrix x;
    ComplexMatrix tmp;
  };
  /// Evaluates the transfer matrix into ws.x given *effective* phases q.
  void forward_into(const ParameterVector& q, Workspace& ws) const;

  void check_param_size(const ParameterVector& p) const;

protected:
  Device(Eigen::Index n_modes, Eigen::Index n_layers, std::optional<CrosstalkModel> crosstalk,
         std::optional<RngProvenance> provenance)
      : n_modes_(n_modes),
        n_layers_(n_layers),
        crosstalk_(std::move(crosstalk)),
        provenance_(std::move(provenance)) {}

  Eigen::Index n_modes_;
  Eigen::Index n_layers_;
  Eigen::Index param_count_ = 0;
  std::optional<CrosstalkModel> crosstalk_;
  std::optional<RngProvenance> provenance_;
  std::vector<Stage> stages_;
  std::vector<std::vector<Eigen::Index>> shifter_arrays_;
  std::vector<ComplexMatrix> mixers_;
};

/// Alternating fixed mixers and tunable phase-shifter arrays:
/// X = L_{m+1} A_m L_m ... A_1 L_1, each L_i = diag(e^{i theta_ik}).
/// With include_output_phases=false the final array L_{m+1} is removed.
class MplcDevice final : public Device {
public:
  /// Mixers are validated as N x N unitaries. Pairwise distinctness
  /// (||A_i - A_j||_F > 1e-6) is enforced unless require_distinct_mixers
  /// is false (degenerate configurations for testing only).
  MplcDevice(Eigen::Index n_modes, std::vector<ComplexMatrix> mixers, bool include_output_phases,
             std::optional<CrosstalkModel> crosstalk = std::nullopt,
             std::optional<RngProvenance> provenance = std::nullopt,
             bool require_distinct_mixers = true);

  /// Haar-samples the m mixers from the given stream and records provenance.
  static MplcDevice sample(Eigen::Index n_modes, Eigen::Index n_layers,
                           bool include_output_phases, std::optional<CrosstalkModel> crosstalk,
                           RngStream rng);

  bool include_output_phases() const noexcept { return include_output_phases_; }

  /// (#arrays)(N-1) + 1: each array loses one DOF to the global phase,
  /// which is then counted once for the whole device.
  Eigen::Index dof_count() const override;
  std::string kind() const override { return "mplc"; }
  std::unique_ptr<Device> clone() const override;

private:
  bool include_output_phases_;
};

/// Rectangular MZI mesh: layer j holds N/2 MZIs when j is odd (starting at
/// mode 0) and N/2 - 1 when j is even (starting at mode 1), followed by a
/// final array of N output phase shifters. n_modes must be even.
class ClementsDevice final : public Device {
public:
  ClementsDevice(Eigen::Index n_modes, Eigen::Index n_layers,
                 std::optional<CrosstalkModel> crosstalk = std::nullopt);

  /// Every parameter is an independent degree of freedom here.
  Eigen::Index dof_count() const override { return param_count(); }
  std::string kind() const override { return "clements"; }
  std::unique_ptr<Device> clone() const override;
};

}  // namespace umesh
