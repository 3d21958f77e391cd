#include "mimic/markov_chain.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "mimic/path_law.hpp"

namespace mimic {

void require_probability_vector(const Eigen::VectorXd& vector, const char* what) {
    for (Eigen::Index i = 0; i < vector.size(); ++i)
        if (!(vector(i) >= 0.0) || !std::isfinite(vector(i)))
            throw std::invalid_argument(std::string(what) + " has a negative or non-finite entry");
    if (std::abs(vector.sum() - 1.0) > kNormalizationTolerance)
        throw std::invalid_argument(std::string(what) + " does not sum to 1");
}

void require_row_stochastic(const Eigen::MatrixXd& matrix, const char* what) {
    for (Eigen::Index r = 0; r < matrix.rows(); ++r)
        require_probability_vector(matrix.row(r).transpose(), what);
}

MarkovChainModel::MarkovChainModel(StateSpace states, Eigen::VectorXd initial,
                                   std::vector<Eigen::MatrixXd> kernels)
    : states_(std::move(states)), initial_(std::move(initial)), kernels_(std::move(kernels)) {
    validate();
}

MarkovChainModel::MarkovChainModel(StateSpace states, ActionSpace actions, Eigen::VectorXd initial,
                                   std::vector<Eigen::MatrixXd> kernels,
                                   std::vector<Eigen::MatrixXd> policy)
    : states_(std::move(states)),
      actions_(std::move(actions)),
      initial_(std::move(initial)),
      kernels_(std::move(kernels)),
      policy_(std::move(policy)) {
    validate();
}

void MarkovChainModel::validate() const {
    const auto m = static_cast<Eigen::Index>(states_.size());
    if (initial_.size() != m) throw std::invalid_argument("initial law has wrong dimension");
    require_probability_vector(initial_, "initial law");
    for (const auto& k : kernels_) {
        if (k.rows() != m || k.cols() != m) throw std::invalid_argument("kernel has wrong shape");
        require_row_stochastic(k, "transition kernel");
    }
    if (!actions_) return;
    if (policy_.size() < kernels_.size())
        throw std::invalid_argument("controlled chain needs one policy matrix per step");
    const auto a = static_cast<Eigen::Index>(actions_->size());
    for (const auto& p : policy_) {
        if (p.rows() != m || p.cols() != a) throw std::invalid_argument("policy has wrong shape");
        require_row_stochastic(p, "policy");
    }
}

}  // namespace mimic
