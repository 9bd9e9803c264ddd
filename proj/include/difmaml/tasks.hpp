#pragma once

#include <span>
#include <variant>
#include <vector>

#include "difmaml/autodiff.hpp"
#include "difmaml/rng.hpp"
#include "difmaml/vecmath.hpp"

namespace difmaml::tasks {

// Sine regression task: targets y = amplitude * sin(x + phase),
// inputs uniform on [-5, 5].
struct SineTask {
    double amplitude;
    double phase;
};

// Analytically tractable quadratic task used as a ground-truth oracle:
//   Q(w; x) = 0.5 (w - theta - x)' H (w - theta - x),  x ~ Normal(0, sigma^2 I)
// The Hessian is H for every draw, so only the gradient carries noise.
struct QuadTask {
    SymMatrix h;
    ParamVector theta;
    double sigma = 0.0;

    int dim() const { return h.n; }
};

using Task = std::variant<SineTask, QuadTask>;

// Finite-support distribution over quadratic tasks; probabilities sum to 1.
struct QuadSupport {
    std::vector<QuadTask> tasks;
    std::vector<double> probs;
};

enum class Family { sine, quad };

// Agent-specific task distributions. For the sine family, the amplitude
// interval [0.1, 5.0) is evenly partitioned into agent_count half-open
// sub-intervals assigned by agent index; phases always span [0, pi].
struct TaskDistribution {
    Family family = Family::sine;
    int agent_count = 1;

    // sine family; inputs are always Uniform[-5, 5]
    double amp_lo = 0.1;
    double amp_hi = 5.0;
    double phase_lo = 0.0;
    double phase_hi = 3.14159265358979323846;

    // quad family: one finite support per agent
    std::vector<QuadSupport> quad_supports;

    std::pair<double, double> amplitude_interval(int agent) const;

    // All agents' tasks merged into a single-agent distribution (used by the
    // centralized reference and by evaluation).
    TaskDistribution union_of() const;
};

std::vector<Task> sample_tasks(const TaskDistribution& dist, int agent, int n,
                               RngStream& rng);

autodiff::DataBatch sample_data(const Task& task, int n, RngStream& rng);

// Exact stochastic risk of a quadratic task:
//   J(w) = 0.5 (w - theta)' H (w - theta) + 0.5 sigma^2 tr(H)
double quad_exact_risk(const QuadTask& task, const ParamVector& w);

// Plain (tape-free) batch loss of a quadratic task.
double quad_batch_loss(const QuadTask& task, const ParamVector& w,
                       const autodiff::DataBatch& batch);

// Taped quadratic loss; per-sample term 0.5 (w - theta - x_n)' H (w - theta - x_n).
class QuadLoss final : public autodiff::LossFunction {
public:
    explicit QuadLoss(const QuadTask& task) : task_(&task) {}

    int param_dim() const override { return task_->dim(); }
    autodiff::NodeId build(autodiff::Tape& tape, autodiff::NodeId w,
                           const autodiff::DataBatch& batch) const override;

private:
    const QuadTask* task_;
};

}  // namespace difmaml::tasks
