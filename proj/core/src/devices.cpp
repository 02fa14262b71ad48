#include "umesh/devices.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace umesh {

// ---------------------------------------------------------------------------
// CrosstalkModel

CrosstalkModel::CrosstalkModel(std::vector<Tap> kernel) : kernel_(std::move(kernel)) {
  if (kernel_.empty()) {
    throw InvalidParameter("CrosstalkModel: kernel must not be empty");
  }
  std::unordered_set<int> seen;
  bool has_center = false;
  for (const Tap& tap : kernel_) {
    if (!seen.insert(tap.offset).second) {
      throw InvalidParameter("CrosstalkModel: duplicate kernel offset");
    }
    if (!std::isfinite(tap.coefficient)) {
      throw InvalidParameter("CrosstalkModel: non-finite kernel coefficient");
    }
    if (tap.offset == 0) {
      has_center = true;
      if (tap.coefficient != 1.0) {
        throw InvalidParameter("CrosstalkModel: coefficient at offset 0 must equal 1.0");
      }
    }
  }
  if (!has_center) {
    throw InvalidParameter("CrosstalkModel: kernel must contain offset 0");
  }
  std::sort(kernel_.begin(), kernel_.end(),
            [](const Tap& a, const Tap& b) { return a.offset < b.offset; });
  for (Eigen::Index n = 1; n <= 64; ++n) {
    check_invertible(n);
  }
}

CrosstalkModel CrosstalkModel::neighbor_default() {
  return CrosstalkModel({{-2, 0.1}, {-1, 0.5}, {0, 1.0}, {1, 0.5}, {2, 0.1}});
}

Eigen::VectorXd CrosstalkModel::apply(const Eigen::VectorXd& phases) const {
  const Eigen::Index n = phases.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (const Tap& tap : kernel_) {
      const Eigen::Index j = i + tap.offset;
      if (j >= 0 && j < n) acc += tap.coefficient * phases(j);
    }
    out(i) = acc;
  }
  return out;
}

Eigen::VectorXd CrosstalkModel::apply_transpose(const Eigen::VectorXd& g) const {
  const Eigen::Index n = g.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  // (K^T g)_j = sum_i K_ij g_i with K_ij = c(j - i), i.e. j = i + offset.
  for (Eigen::Index i = 0; i < n; ++i) {
    for (const Tap& tap : kernel_) {
      const Eigen::Index j = i + tap.offset;
      if (j >= 0 && j < n) out(j) += tap.coefficient * g(i);
    }
  }
  return out;
}

Eigen::MatrixXd CrosstalkModel::banded_matrix(Eigen::Index n) const {
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (const Tap& tap : kernel_) {
      const Eigen::Index j = i + tap.offset;
      if (j >= 0 && j < n) k(i, j) = tap.coefficient;
    }
  }
  return k;
}

void CrosstalkModel::check_invertible(Eigen::Index n) const {
  if (n < 1) return;
  const double det = banded_matrix(n).partialPivLu().determinant();
  if (!std::isfinite(det) || std::abs(det) == 0.0) {
    throw InvariantViolation("CrosstalkModel: banded map is singular for array size " +
                             std::to_string(n));
  }
}

bool CrosstalkModel::operator==(const CrosstalkModel& other) const {
  if (kernel_.size() != other.kernel_.size()) return false;
  for (std::size_t i = 0; i < kernel_.size(); ++i) {
    if (kernel_[i].offset != other.kernel_[i].offset ||
        kernel_[i].coefficient != other.kernel_[i].coefficient) {
      return false;
    }
  }
  return true;
}

Eigen::VectorXd apply_crosstalk(const Eigen::VectorXd& phases, const CrosstalkModel& model) {
  return model.apply(phases);
}

// ---------------------------------------------------------------------------
// MZI transfer

namespace {

const Eigen::Matrix2cd& beam_splitter() {
  static const Eigen::Matrix2cd bs = [] {
    const double s = 1.0 / std::sqrt(2.0);
    Eigen::Matrix2cd m;
    m << Complex(s, 0), Complex(0, s), Complex(0, s), Complex(s, 0);
    return m;
  }();
  return bs;
}

}  // namespace

Eigen::Matrix2cd mzi_transfer(double theta, double phi) {
  const Complex eith = std::polar(1.0, theta);
  const Complex eiph = std::polar(1.0, phi);
  Eigen::Matrix2cd inner = beam_splitter();
  inner.row(0) *= eith;  // theta on the upper internal arm
  Eigen::Matrix2cd t = beam_splitter() * inner;
  t.col(0) *= eiph;  // phi on the upper input arm
  return t;
}

Eigen::Matrix2cd mzi_transfer_dtheta(double theta, double phi) {
  const Complex ieith = Complex(0, 1) * std::polar(1.0, theta);
  const Complex eiph = std::polar(1.0, phi);
  Eigen::Matrix2cd inner = beam_splitter();
  inner.row(0) *= ieith;
  inner.row(1).setZero();
  Eigen::Matrix2cd t = beam_splitter() * inner;
  t.col(0) *= eiph;
  return t;
}

Eigen::Matrix2cd mzi_transfer_dphi(double theta, double phi) {
  Eigen::Matrix2cd t = mzi_transfer(theta, phi);
  t.col(0) *= Complex(0, 1);
  t.col(1).setZero();
  return t;
}

// ---------------------------------------------------------------------------
// Device

const ComplexMatrix& Device::mixer(int index) const {
  if (index < 0 || index >= static_cast<int>(mixers_.size())) {
    throw InvalidParameter("Device::mixer: index out of range");
  }
  return mixers_[static_cast<std::size_t>(index)];
}

void Device::check_param_size(const ParameterVector& p) const {
  if (p.size() != param_count_) {
    throw InvalidParameter("parameter vector has length " + std::to_string(p.size()) +
                           ", device expects " + std::to_string(param_count_));
  }
}

ParameterVector Device::effective_phases(const ParameterVector& p) const {
  check_param_size(p);
  if (!crosstalk_) return p;
  ParameterVector q = p;
  Eigen::VectorXd buf;
  for (const auto& group : shifter_arrays_) {
    buf.resize(static_cast<Eigen::Index>(group.size()));
    for (std::size_t i = 0; i < group.size(); ++i) buf(static_cast<Eigen::Index>(i)) = p(group[i]);
    const Eigen::VectorXd coupled = crosstalk_->apply(buf);
    for (std::size_t i = 0; i < group.size(); ++i) q(group[i]) = coupled(static_cast<Eigen::Index>(i));
  }
  return q;
}

ParameterVector Device::pullback_phase_gradient(const ParameterVector& g) const {
  if (g.size() != param_count_) {
    throw InvalidParameter("pullback_phase_gradient: gradient length mismatch");
  }
  if (!crosstalk_) return g;
  ParameterVector out = g;
  Eigen::VectorXd buf;
  for (const auto& group : shifter_arrays_) {
    buf.resize(static_cast<Eigen::Index>(group.size()));
    for (std::size_t i = 0; i < group.size(); ++i) buf(static_cast<Eigen::Index>(i)) = g(group[i]);
    const Eigen::VectorXd pulled = crosstalk_->apply_transpose(buf);
    for (std::size_t i = 0; i < group.size(); ++i) out(group[i]) = pulled(static_cast<Eigen::Index>(i));
  }
  return out;
}

void Device::forward_into(const ParameterVector& q, Workspace& ws) const {
  const Eigen::Index n = n_modes_;
  ws.x = ComplexMatrix::Identity(n, n);
  for (const Stage& st : stages_) {
    switch (st.kind) {
      case Stage::Kind::PhaseArray:
        for (Eigen::Index r = 0; r < n; ++r) {
          ws.x.row(r) *= std::polar(1.0, q(st.param_offset + r));
        }
        break;
      case Stage::Kind::Mixer:
        ws.tmp.noalias() = mixers_[static_cast<std::size_t>(st.mixer_index)] * ws.x;
        ws.x.swap(ws.tmp);
        break;
      case Stage::Kind::MziLayer:
        for (Eigen::Index t = 0; t < st.n_mzi; ++t) {
          const Eigen::Index a = st.first_mode + 2 * t;
          const Eigen::Matrix2cd m = mzi_transfer(q(st.param_offset + 2 * t),
                                                  q(st.param_offset + 2 * t + 1));
          for (Eigen::Index c = 0; c < n; ++c) {
            const Complex top = ws.x(a, c);
            const Complex bot = ws.x(a + 1, c);
            ws.x(a, c) = m(0, 0) * top + m(0, 1) * bot;
            ws.x(a + 1, c) = m(1, 0) * top + m(1, 1) * bot;
          }
        }
        break;
    }
  }
}

UnitaryMatrix Device::forward(const ParameterVector& p) const {
  const ParameterVector q = effective_phases(p);
  Workspace ws;
  forward_into(q, ws);
  return UnitaryMatrix::trusted(std::move(ws.x));
}

// ---------------------------------------------------------------------------
// MplcDevice

MplcDevice::MplcDevice(Eigen::Index n_modes, std::vector<ComplexMatrix> mixers,
                       bool include_output_phases, std::optional<CrosstalkModel> crosstalk,
                       std::optional<RngProvenance> provenance, bool require_distinct_mixers)
    : Device(n_modes, static_cast<Eigen::Index>(mixers.size()), std::move(crosstalk),
             std::move(provenance)),
      include_output_phases_(include_output_phases) {
  if (n_modes < 1) throw InvalidDimension("MplcDevice: n_modes must be >= 1");
  if (mixers.empty()) throw InvalidParameter("MplcDevice: at least one mixer layer required");
  mixers_ = std::move(mixers);

  const double bound = 1e-10 * static_cast<double>(n_modes);
  for (const ComplexMatrix& a : mixers_) {
    if (a.rows() != n_modes || a.cols() != n_modes) {
      throw InvalidDimension("MplcDevice: mixer dimension mismatch");
    }
    if (unitarity_defect(a) > bound) {
      throw InvariantViolation("MplcDevice: mixer is not unitary");
    }
  }
  if (require_distinct_mixers) {
    for (std::size_t i = 0; i < mixers_.size(); ++i) {
      for (std::size_t j = i + 1; j < mixers_.size(); ++j) {
        if ((mixers_[i] - mixers_[j]).norm() <= 1e-6) {
          throw InvariantViolation("MplcDevice: mixers must be pairwise distinct");
        }
      }
    }
  }

  const Eigen::Index m = n_layers_;
  const Eigen::Index n_arrays = include_output_phases_ ? m + 1 : m;
  param_count_ = n_modes_ * n_arrays;

  for (Eigen::Index i = 0; i < n_arrays; ++i) {
    Stage arr;
    arr.kind = Stage::Kind::PhaseArray;
    arr.param_offset = i * n_modes_;
    arr.param_count = n_modes_;
    stages_.push_back(arr);

    std::vector<Eigen::Index> group(static_cast<std::size_t>(n_modes_));
    for (Eigen::Index k = 0; k < n_modes_; ++k) group[static_cast<std::size_t>(k)] = i * n_modes_ + k;
    shifter_arrays_.push_back(std::move(group));

    if (i < m) {
      Stage mix;
      mix.kind = Stage::Kind::Mixer;
      mix.mixer_index = static_cast<int>(i);
      stages_.push_back(mix);
    }
  }

  if (crosstalk_) crosstalk_->check_invertible(n_modes_);
}

MplcDevice MplcDevice::sample(Eigen::Index n_modes, Eigen::Index n_layers,
                              bool include_output_phases, std::optional<CrosstalkModel> crosstalk,
                              RngStream rng) {
  if (n_layers < 1) throw InvalidParameter("MplcDevice::sample: n_layers must be >= 1");
  RngProvenance prov{rng.seed(), rng.stream_id()};
  std::vector<ComplexMatrix> mixers;
  mixers.reserve(static_cast<std::size_t>(n_layers));
  for (Eigen::Index i = 0; i < n_layers; ++i) {
    mixers.push_back(haar_random_unitary(n_modes, rng).matrix());
  }
  return MplcDevice(n_modes, std::move(mixers), include_output_phases, std::move(crosstalk), prov);
}

Eigen::Index MplcDevice::dof_count() const {
  const Eigen::Index n_arrays = include_output_phases_ ? n_layers_ + 1 : n_layers_;
  return n_arrays * (n_modes_ - 1) + 1;
}

std::unique_ptr<Device> MplcDevice::clone() const {
  return std::make_unique<MplcDevice>(*this);
}

// ---------------------------------------------------------------------------
// ClementsDevice

ClementsDevice::ClementsDevice(Eigen::Index n_modes, Eigen::Index n_layers,
                               std::optional<CrosstalkModel> crosstalk)
    : Device(n_modes, n_layers, std::move(crosstalk), std::nullopt) {
  if (n_modes < 2 || n_modes % 2 != 0) {
    throw InvalidDimension("ClementsDevice: n_modes must be even (and >= 2)");
  }
  if (n_layers < 1) throw InvalidParameter("ClementsDevice: n_layers must be >= 1");

  Eigen::Index offset = 0;
  for (Eigen::Index j = 1; j <= n_layers; ++j) {
    const bool odd = (j % 2 == 1);
    const Eigen::Index n_mzi = odd ? n_modes / 2 : n_modes / 2 - 1;
    if (n_mzi == 0) continue;  // N=2 even layers have no nodes

    Stage st;
    st.kind = Stage::Kind::MziLayer;
    st.first_mode = odd ? 0 : 1;
    st.n_mzi = n_mzi;
    st.param_offset = offset;
    st.param_count = 2 * n_mzi;
    stages_.push_back(st);

    // Theta and phi shifters form separate physical columns in the mesh, so
    // crosstalk couples each set independently.
    std::vector<Eigen::Index> thetas, phis;
    for (Eigen::Index t = 0; t < n_mzi; ++t) {
      thetas.push_back(offset + 2 * t);
      phis.push_back(offset + 2 * t + 1);
    }
    shifter_arrays_.push_back(std::move(thetas));
    shifter_arrays_.push_back(std::move(phis));

    offset += 2 * n_mzi;
  }

  Stage out;
  out.kind = Stage::Kind::PhaseArray;
  out.param_offset = offset;
  out.param_count = n_modes;
  stages_.push_back(out);
  std::vector<Eigen::Index> out_group(static_cast<std::size_t>(n_modes));
  for (Eigen::Index k = 0; k < n_modes; ++k) out_group[static_cast<std::size_t>(k)] = offset + k;
  shifter_arrays_.push_back(std::move(out_group));

  param_count_ = offset + n_modes;

  if (crosstalk_) {
    crosstalk_->check_invertible(n_modes_);
    crosstalk_->check_invertible(n_modes_ / 2);
    if (n_modes_ / 2 - 1 >= 1) crosstalk_->check_invertible(n_modes_ / 2 - 1);
  }
}

std::unique_ptr<Device> ClementsDevice::clone() const {
  return std::make_unique<ClementsDevice>(*this);
}

}  // namespace umesh
