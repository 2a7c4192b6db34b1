#include "robustcf/moment_model.hpp"

#include "robustcf/errors.hpp"

namespace robustcf {

bool ParameterBox::contains(const Eigen::VectorXd& theta, double tol) const {
  if (theta.size() != lower.size()) return false;
  return ((theta.array() >= lower.array() - tol) &&
          (theta.array() <= upper.array() + tol)).all();
}

Eigen::VectorXd ParameterBox::clamp(const Eigen::VectorXd& theta) const {
  return theta.cwiseMax(lower).cwiseMin(upper);
}

Multipliers Multipliers::zero(const Dims& dims) {
  Multipliers m;
  m.lambda1 = Eigen::VectorXd::Zero(dims.d1);
  m.lambda2 = Eigen::VectorXd::Zero(dims.d2);
  m.lambda3 = Eigen::VectorXd::Zero(dims.d3);
  m.lambda4 = Eigen::VectorXd::Zero(dims.d4);
  return m;
}

Multipliers Multipliers::from_stacked(const Dims& dims, double eta, double zeta,
                                      const Eigen::VectorXd& stacked) {
  if (stacked.size() != dims.total())
    throw ArgumentError("Multipliers::from_stacked: length mismatch");
  Multipliers m;
  m.eta = eta;
  m.zeta = zeta;
  m.lambda1 = stacked.segment(0, dims.d1);
  m.lambda2 = stacked.segment(dims.d1, dims.d2);
  m.lambda3 = stacked.segment(dims.d1 + dims.d2, dims.d3);
  m.lambda4 = stacked.segment(dims.d1 + dims.d2 + dims.d3, dims.d4);
  return m;
}

Eigen::VectorXd Multipliers::stacked() const {
  Eigen::VectorXd out(lambda1.size() + lambda2.size() + lambda3.size() + lambda4.size());
  out << lambda1, lambda2, lambda3, lambda4;
  return out;
}

Eigen::VectorXd Multipliers::lambda12() const {
  Eigen::VectorXd out(lambda1.size() + lambda2.size());
  out << lambda1, lambda2;
  return out;
}

Eigen::VectorXd ReducedForm::stacked_padded(const Dims& dims) const {
  if (P1.size() != dims.d1 || P2.size() != dims.d2)
    throw ArgumentError("ReducedForm: P1/P2 lengths do not match model dims");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dims.total());
  out.segment(0, dims.d1) = P1;
  out.segment(dims.d1, dims.d2) = P2;
  return out;
}

double MomentModel::eval_k(Eigen::Ref<const Eigen::RowVectorXd>, const Eigen::VectorXd&) const {
  throw CapabilityError(name() + ": explicit counterfactual not defined");
}

double MomentModel::implicit_k_value(const Eigen::VectorXd&) const {
  throw CapabilityError(name() + ": implicit counterfactual not defined");
}

Eigen::MatrixXd MomentModel::eval_g_batch(const Eigen::MatrixXd& points,
                                          const Eigen::VectorXd& theta) const {
  Eigen::MatrixXd out(points.rows(), dims().total());
  Eigen::RowVectorXd row(dims().total());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    eval_g(points.row(i), theta, row);
    out.row(i) = row;
  }
  return out;
}

Eigen::VectorXd MomentModel::eval_k_batch(const Eigen::MatrixXd& points,
                                          const Eigen::VectorXd& theta) const {
  Eigen::VectorXd out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) out[i] = eval_k(points.row(i), theta);
  return out;
}

namespace {

class ShapeAugmentedModel : public MomentModel {
 public:
  ShapeAugmentedModel(std::shared_ptr<const MomentModel> base, std::vector<ShapeRow> rows)
      : base_(std::move(base)) {
    for (auto& r : rows) {
      if (r.kind == ShapeRowKind::InequalityToZero)
        ineq_rows_.push_back(std::move(r));
      else
        eq_rows_.push_back(std::move(r));
    }
    Dims b = base_->dims();
    dims_ = {b.d1, b.d2, b.d3 + static_cast<int>(ineq_rows_.size()),
             b.d4 + static_cast<int>(eq_rows_.size())};
  }

  Dims dims() const override { return dims_; }
  int u_dim() const override { return base_->u_dim(); }
  const ParameterBox& theta_box() const override { return base_->theta_box(); }
  std::string name() const override { return base_->name() + "+shape"; }

  void eval_g(Eigen::Ref<const Eigen::RowVectorXd> u, const Eigen::VectorXd& theta,
              Eigen::Ref<Eigen::RowVectorXd> out) const override {
    Dims b = base_->dims();
    Eigen::RowVectorXd base_row(b.total());
    base_->eval_g(u, theta, base_row);
    int pos = 0;
    out.segment(pos, b.d1) = base_row.segment(0, b.d1);
    pos += b.d1;
    out.segment(pos, b.d2) = base_row.segment(b.d1, b.d2);
    pos += b.d2;
    out.segment(pos, b.d3) = base_row.segment(b.d1 + b.d2, b.d3);
    pos += b.d3;
    for (const auto& r : ineq_rows_) out[pos++] = r.eval(u);
    out.segment(pos, b.d4) = base_row.segment(b.d1 + b.d2 + b.d3, b.d4);
    pos += b.d4;
    for (const auto& r : eq_rows_) out[pos++] = r.eval(u);
  }

  bool implicit_k() const override { return base_->implicit_k(); }
  double eval_k(Eigen::Ref<const Eigen::RowVectorXd> u,
                const Eigen::VectorXd& theta) const override {
    return base_->eval_k(u, theta);
  }
  double implicit_k_value(const Eigen::VectorXd& theta) const override {
    return base_->implicit_k_value(theta);
  }

 private:
  std::shared_ptr<const MomentModel> base_;
  std::vector<ShapeRow> ineq_rows_, eq_rows_;
  Dims dims_;
};

}  // namespace

std::shared_ptr<const MomentModel> append_shape_restrictions(
    std::shared_ptr<const MomentModel> base, std::vector<ShapeRow> rows) {
  if (rows.empty()) return base;
  return std::make_shared<ShapeAugmentedModel>(std::move(base), std::move(rows));
}

}  // namespace robustcf
