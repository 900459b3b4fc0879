#include "wncs/coil.hpp"

#include <sstream>

#include "wncs/error.hpp"
#include "wncs/mat.hpp"

namespace wncs {

double coil_value(const SubsystemModel& model, int t_prev) {
  if (t_prev < 0) throw Error(ErrorCode::kInvalidArgument, "age must be nonnegative", "t_prev");
  const Eigen::MatrixXd P = model.covariance_at_age(t_prev + 1);
  const double value = (model.Gamma() * (P - model.P_bar())).trace();
  if (!(value > kCoilFloor)) {
    std::ostringstream os;
    os << "cost of information loss is " << value << "; timers need a positive cost";
    throw Error(ErrorCode::kDegeneratePriority, os.str());
  }
  return value;
}

CoilTable::CoilTable(const SubsystemModel& model)
    : model_(&model),
      hit_cost_((model.Gamma() * model.P_bar()).trace()),
      noise_cost_((model.Pi() * model.W()).trace()) {
  cov_.push_back(model.P_bar());
  gamma_trace_.push_back(hit_cost_);
}

int CoilTable::extend_to(int t) {
  while (!saturated_ && static_cast<int>(cov_.size()) <= t) {
    Eigen::MatrixXd next = h_map(model_->A(), model_->W(), cov_.back());
    const double tr = (model_->Gamma() * next).trace();
    if (!next.allFinite() || !std::isfinite(tr)) {
      saturated_ = true;
      break;
    }
    cov_.push_back(std::move(next));
    gamma_trace_.push_back(tr);
  }
  return std::min(t, static_cast<int>(cov_.size()) - 1);
}

const Eigen::MatrixXd& CoilTable::covariance(int t) { return cov_[extend_to(t)]; }

double CoilTable::miss_cost(int t_prev) { return gamma_trace_[extend_to(t_prev + 1)]; }

double timer_priority(double coil, long long& floor_events) {
  if (!(coil >= kCoilFloor)) {
    ++floor_events;
    return kCoilFloor;
  }
  return coil;
}

double expected_stage_cost(std::span<CoilTable> tables, std::span<const int> ages,
                           const Allocation& allocation, const LinkQualityMatrix& q) {
  if (tables.size() != ages.size() || static_cast<Eigen::Index>(tables.size()) != q.subsystems()) {
    throw Error(ErrorCode::kDimensionMismatch, "models, ages and q rows must agree");
  }
  allocation.validate(q.subsystems(), q.channels());
  double total = 0.0;
  for (std::size_t i = 0; i < tables.size(); ++i) {
    total += tables[i].noise_cost() + tables[i].miss_cost(ages[i]);
  }
  for (const auto& p : allocation.sorted()) {
    total -= tables[p.subsystem].coil(ages[p.subsystem]) * q(p.subsystem, p.channel);
  }
  return total;
}

double expected_stage_cost(std::span<const SubsystemModel> models, std::span<const int> ages,
                           const Allocation& allocation, const LinkQualityMatrix& q) {
  std::vector<CoilTable> tables;
  tables.reserve(models.size());
  for (const auto& m : models) tables.emplace_back(m);
  return expected_stage_cost(std::span<CoilTable>(tables), ages, allocation, q);
}

Eigen::MatrixXd coil_weighted(std::span<CoilTable> tables, std::span<const int> ages,
                              const Eigen::MatrixXd& w) {
  Eigen::MatrixXd out(w.rows(), w.cols());
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    out.row(i) = tables[i].coil(ages[i]) * w.row(i);
  }
  return out;
}

}  // namespace wncs
