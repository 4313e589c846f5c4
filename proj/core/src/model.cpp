#include "igd/model.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstring>
#include <limits>

#include "igd/rng.hpp"

namespace igd {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMat = Eigen::Map<const RowMat>;
using MutMat = Eigen::Map<RowMat>;
using ConstVec = Eigen::Map<const Eigen::VectorXd>;
using MutVec = Eigen::Map<Eigen::VectorXd>;

// Flat offsets into the parameter vector; see the layout note in model.hpp.
struct Layout {
    std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0, total = 0;
};

Layout layout_of(const ModelSpec& s) {
    Layout l;
    switch (s.family) {
    case ModelFamily::logistic: {
        const std::size_t r = static_cast<std::size_t>(s.num_classes - 1);
        const std::size_t d = static_cast<std::size_t>(s.input_dim);
        l.w1 = 0;
        l.b1 = r * d;
        l.total = r * d + r;
        break;
    }
    case ModelFamily::mlp: {
        const std::size_t d = static_cast<std::size_t>(s.input_dim);
        const std::size_t h = static_cast<std::size_t>(s.hidden_dim);
        const std::size_t c = static_cast<std::size_t>(s.num_classes);
        l.w1 = 0;
        l.b1 = h * d;
        l.w2 = h * d + h;
        l.b2 = l.w2 + c * h;
        l.total = l.b2 + c;
        break;
    }
    case ModelFamily::embedbag: {
        const std::size_t v = static_cast<std::size_t>(s.vocab_size);
        const std::size_t d = static_cast<std::size_t>(s.embed_dim);
        const std::size_t c = static_cast<std::size_t>(s.num_classes);
        l.w1 = 0;          // embedding table E
        l.w2 = v * d;      // head weights W
        l.b2 = v * d + c * d;
        l.total = l.b2 + c;
        break;
    }
    }
    return l;
}

void check_example(const ModelSpec& spec, const Example& z) {
    if (spec.modality() == Modality::dense) {
        if (static_cast<int>(z.features.size()) != spec.input_dim)
            throw config_error("example " + std::to_string(z.id) + " has " +
                               std::to_string(z.features.size()) + " features, model expects " +
                               std::to_string(spec.input_dim));
    } else {
        if (z.tokens.empty())
            throw config_error("example " + std::to_string(z.id) + " has no tokens");
        for (TokenId t : z.tokens) {
            if (t < 0 || t >= spec.vocab_size)
                throw config_error("token " + std::to_string(t) + " out of vocabulary in example " +
                                   std::to_string(z.id));
        }
    }
    if (z.label < 0 || z.label >= spec.num_classes)
        throw config_error("label " + std::to_string(z.label) + " out of range in example " +
                           std::to_string(z.id));
}

struct Forward {
    Eigen::VectorXd a; // penultimate input: features, tanh hidden, or pooled embedding
    Eigen::VectorXd u; // logits
    Eigen::VectorXd p; // softmax
    double lse = 0.0;
};

Eigen::VectorXd stable_softmax(const Eigen::VectorXd& u, double& lse) {
    const double m = u.maxCoeff();
    Eigen::VectorXd e = (u.array() - m).exp();
    const double s = e.sum();
    lse = m + std::log(s);
    return e / s;
}

Forward forward(const ModelSpec& spec, const Eigen::VectorXd& theta, const Example& z) {
    const Layout l = layout_of(spec);
    const int c = spec.num_classes;
    Forward f;
    switch (spec.family) {
    case ModelFamily::logistic: {
        ConstVec x(z.features.data(), spec.input_dim);
        ConstMat w(theta.data() + l.w1, c - 1, spec.input_dim);
        ConstVec b(theta.data() + l.b1, c - 1);
        f.a = x;
        f.u = Eigen::VectorXd::Zero(c);
        f.u.tail(c - 1) = w * x + b;
        break;
    }
    case ModelFamily::mlp: {
        ConstVec x(z.features.data(), spec.input_dim);
        ConstMat w1(theta.data() + l.w1, spec.hidden_dim, spec.input_dim);
        ConstVec b1(theta.data() + l.b1, spec.hidden_dim);
        ConstMat w2(theta.data() + l.w2, c, spec.hidden_dim);
        ConstVec b2(theta.data() + l.b2, c);
        f.a = (w1 * x + b1).array().tanh();
        f.u = w2 * f.a + b2;
        break;
    }
    case ModelFamily::embedbag: {
        ConstMat e(theta.data() + l.w1, spec.vocab_size, spec.embed_dim);
        ConstMat w(theta.data() + l.w2, c, spec.embed_dim);
        ConstVec b(theta.data() + l.b2, c);
        f.a = Eigen::VectorXd::Zero(spec.embed_dim);
        for (TokenId t : z.tokens) f.a += e.row(t);
        f.a /= static_cast<double>(z.tokens.size());
        f.u = w * f.a + b;
        break;
    }
    }
    f.p = stable_softmax(f.u, f.lse);
    return f;
}

// Accumulates the parameter gradient that corresponds to a logit gradient g,
// scaled by `weight`, into `out` (size = param count).
void backward(const ModelSpec& spec, const Eigen::VectorXd& theta, const Example& z,
              const Forward& f, const Eigen::VectorXd& g, double weight, Eigen::VectorXd& out) {
    const Layout l = layout_of(spec);
    const int c = spec.num_classes;
    switch (spec.family) {
    case ModelFamily::logistic: {
        ConstVec x(z.features.data(), spec.input_dim);
        MutMat dw(out.data() + l.w1, c - 1, spec.input_dim);
        MutVec db(out.data() + l.b1, c - 1);
        dw.noalias() += weight * g.tail(c - 1) * x.transpose();
        db += weight * g.tail(c - 1);
        break;
    }
    case ModelFamily::mlp: {
        ConstVec x(z.features.data(), spec.input_dim);
        ConstMat w2(theta.data() + l.w2, c, spec.hidden_dim);
        MutMat dw1(out.data() + l.w1, spec.hidden_dim, spec.input_dim);
        MutVec db1(out.data() + l.b1, spec.hidden_dim);
        MutMat dw2(out.data() + l.w2, c, spec.hidden_dim);
        MutVec db2(out.data() + l.b2, c);
        dw2.noalias() += weight * g * f.a.transpose();
        db2 += weight * g;
        Eigen::VectorXd da = w2.transpose() * g;
        Eigen::VectorXd ds = (1.0 - f.a.array().square()).matrix().cwiseProduct(da);
        dw1.noalias() += weight * ds * x.transpose();
        db1 += weight * ds;
        break;
    }
    case ModelFamily::embedbag: {
        ConstMat w(theta.data() + l.w2, c, spec.embed_dim);
        MutMat de(out.data() + l.w1, spec.vocab_size, spec.embed_dim);
        MutMat dw(out.data() + l.w2, c, spec.embed_dim);
        MutVec db(out.data() + l.b2, c);
        dw.noalias() += weight * g * f.a.transpose();
        db += weight * g;
        const double inv_t = weight / static_cast<double>(z.tokens.size());
        Eigen::VectorXd da = w.transpose() * g;
        for (TokenId t : z.tokens) de.row(t) += inv_t * da.transpose();
        break;
    }
    }
}

// Softmax Jacobian applied to a logit tangent: (diag(p) - p p^T) du.
Eigen::VectorXd softmax_jvp(const Eigen::VectorXd& p, const Eigen::VectorXd& du) {
    return p.cwiseProduct(du) - p.dot(du) * p;
}

// Forward-over-reverse Hessian-vector product of the cross-entropy at one
// example, scaled by `weight` and accumulated into `out`.
void hvp_example(const ModelSpec& spec, const Eigen::VectorXd& theta, const Example& z,
                 const Forward& f, const Eigen::VectorXd& v, double weight, Eigen::VectorXd& out) {
    const Layout l = layout_of(spec);
    const int c = spec.num_classes;
    switch (spec.family) {
    case ModelFamily::logistic: {
        ConstVec x(z.features.data(), spec.input_dim);
        ConstMat vw(v.data() + l.w1, c - 1, spec.input_dim);
        ConstVec vb(v.data() + l.b1, c - 1);
        Eigen::VectorXd du = Eigen::VectorXd::Zero(c);
        du.tail(c - 1) = vw * x + vb;
        Eigen::VectorXd dg = softmax_jvp(f.p, du);
        MutMat hw(out.data() + l.w1, c - 1, spec.input_dim);
        MutVec hb(out.data() + l.b1, c - 1);
        hw.noalias() += weight * dg.tail(c - 1) * x.transpose();
        hb += weight * dg.tail(c - 1);
        break;
    }
    case ModelFamily::mlp: {
        ConstVec x(z.features.data(), spec.input_dim);
        ConstMat w2(theta.data() + l.w2, c, spec.hidden_dim);
        ConstMat vw1(v.data() + l.w1, spec.hidden_dim, spec.input_dim);
        ConstVec vb1(v.data() + l.b1, spec.hidden_dim);
        ConstMat vw2(v.data() + l.w2, c, spec.hidden_dim);
        ConstVec vb2(v.data() + l.b2, c);

        const Eigen::ArrayXd one_m_a2 = 1.0 - f.a.array().square();
        Eigen::VectorXd sdot = vw1 * x + vb1;
        Eigen::VectorXd adot = (one_m_a2 * sdot.array()).matrix();
        Eigen::VectorXd udot = vw2 * f.a + w2 * adot + vb2;

        Eigen::VectorXd g = f.p;
        g[z.label] -= 1.0;
        Eigen::VectorXd gdot = softmax_jvp(f.p, udot);

        Eigen::VectorXd da = w2.transpose() * g;
        Eigen::VectorXd da_dot = vw2.transpose() * g + w2.transpose() * gdot;
        Eigen::VectorXd ds_dot = (one_m_a2 * da_dot.array() -
                                  2.0 * f.a.array() * adot.array() * da.array())
                                     .matrix();

        MutMat hw1(out.data() + l.w1, spec.hidden_dim, spec.input_dim);
        MutVec hb1(out.data() + l.b1, spec.hidden_dim);
        MutMat hw2(out.data() + l.w2, c, spec.hidden_dim);
        MutVec hb2(out.data() + l.b2, c);
        hw2.noalias() += weight * (gdot * f.a.transpose() + g * adot.transpose());
        hb2 += weight * gdot;
        hw1.noalias() += weight * ds_dot * x.transpose();
        hb1 += weight * ds_dot;
        break;
    }
    case ModelFamily::embedbag: {
        ConstMat w(theta.data() + l.w2, c, spec.embed_dim);
        ConstMat ve(v.data() + l.w1, spec.vocab_size, spec.embed_dim);
        ConstMat vw(v.data() + l.w2, c, spec.embed_dim);
        ConstVec vb(v.data() + l.b2, c);

        const double inv_t = 1.0 / static_cast<double>(z.tokens.size());
        Eigen::VectorXd adot = Eigen::VectorXd::Zero(spec.embed_dim);
        for (TokenId t : z.tokens) adot += ve.row(t);
        adot *= inv_t;
        Eigen::VectorXd udot = vw * f.a + w * adot + vb;

        Eigen::VectorXd g = f.p;
        g[z.label] -= 1.0;
        Eigen::VectorXd gdot = softmax_jvp(f.p, udot);

        Eigen::VectorXd da_dot = vw.transpose() * g + w.transpose() * gdot;

        MutMat he(out.data() + l.w1, spec.vocab_size, spec.embed_dim);
        MutMat hw(out.data() + l.w2, c, spec.embed_dim);
        MutVec hb(out.data() + l.b2, c);
        hw.noalias() += weight * (gdot * f.a.transpose() + g * adot.transpose());
        hb += weight * gdot;
        const double s = weight * inv_t;
        for (TokenId t : z.tokens) he.row(t) += s * da_dot.transpose();
        break;
    }
    }
}

// Mean cross-entropy + L2 objective and its gradient in one pass.
double objective_and_grad(const ModelSpec& spec, const Eigen::VectorXd& theta,
                          const Dataset& dataset, double l2, Eigen::VectorXd& grad) {
    grad.setZero(theta.size());
    double total = 0.0;
    const double inv_n = 1.0 / static_cast<double>(dataset.size());
    for (const Example& z : dataset.examples) {
        Forward f = forward(spec, theta, z);
        total += f.lse - f.u[z.label];
        Eigen::VectorXd g = f.p;
        g[z.label] -= 1.0;
        backward(spec, theta, z, f, g, inv_n, grad);
    }
    grad += l2 * theta;
    return total * inv_n + 0.5 * l2 * theta.squaredNorm();
}

Eigen::VectorXd init_params(const ModelSpec& spec, std::uint64_t seed) {
    rng::Engine eng(seed);
    const Layout l = layout_of(spec);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(l.total));
    auto fill = [&](std::size_t off, std::size_t count, double scale) {
        for (std::size_t i = 0; i < count; ++i)
            theta[static_cast<Eigen::Index>(off + i)] = rng::uniform(eng, -scale, scale);
    };
    switch (spec.family) {
    case ModelFamily::logistic:
        fill(l.w1, l.b1 - l.w1, 0.01);
        break;
    case ModelFamily::mlp:
        fill(l.w1, l.b1 - l.w1, 1.0 / std::sqrt(static_cast<double>(spec.input_dim)));
        fill(l.w2, l.b2 - l.w2, 1.0 / std::sqrt(static_cast<double>(spec.hidden_dim)));
        break;
    case ModelFamily::embedbag:
        fill(l.w1, l.w2 - l.w1, 0.1);
        fill(l.w2, l.b2 - l.w2, 1.0 / std::sqrt(static_cast<double>(spec.embed_dim)));
        break;
    }
    return theta;
}

} // namespace

std::string to_string(ModelFamily f) {
    switch (f) {
    case ModelFamily::logistic: return "logistic";
    case ModelFamily::mlp: return "mlp";
    case ModelFamily::embedbag: return "embedbag";
    }
    return "logistic";
}

ModelFamily model_family_from_string(const std::string& s) {
    if (s == "logistic") return ModelFamily::logistic;
    if (s == "mlp") return ModelFamily::mlp;
    if (s == "embedbag") return ModelFamily::embedbag;
    throw config_error("unknown model family: " + s);
}

Modality ModelSpec::modality() const {
    return family == ModelFamily::embedbag ? Modality::tokens : Modality::dense;
}

std::size_t ModelSpec::param_count() const {
    return layout_of(*this).total;
}

void ModelSpec::validate() const {
    if (num_classes < 2) throw config_error("num_classes must be >= 2");
    switch (family) {
    case ModelFamily::logistic:
        if (input_dim < 1) throw config_error("logistic model needs input_dim >= 1");
        break;
    case ModelFamily::mlp:
        if (input_dim < 1 || hidden_dim < 1)
            throw config_error("mlp model needs input_dim and hidden_dim >= 1");
        break;
    case ModelFamily::embedbag:
        if (vocab_size < 1 || embed_dim < 1)
            throw config_error("embedbag model needs vocab_size and embed_dim >= 1");
        break;
    }
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw config_error("learning_rate must be positive");
    if (steps < 1) throw config_error("steps must be >= 1");
    if (l2_weight < 0.0) throw config_error("l2_weight must be non-negative");
    if (grad_tolerance < 0.0) throw config_error("grad_tolerance must be non-negative");
}

TrainResult train(const Dataset& dataset, const ModelSpec& spec, const TrainConfig& cfg) {
    spec.validate();
    cfg.validate();
    dataset.validate();
    if (dataset.modality != spec.modality())
        throw config_error("dataset modality does not match model family");
    if (dataset.num_classes > spec.num_classes)
        throw config_error("dataset has more classes than the model");
    if (spec.modality() == Modality::dense && dataset.feature_dim() != spec.input_dim)
        throw config_error("dataset feature dim " + std::to_string(dataset.feature_dim()) +
                           " does not match model input_dim " + std::to_string(spec.input_dim));
    if (spec.modality() == Modality::tokens && dataset.max_token() >= spec.vocab_size)
        throw config_error("dataset token ids exceed model vocab_size");

    TrainResult result;
    result.model.spec = spec;
    result.model.train_config = cfg;
    Eigen::VectorXd theta = init_params(spec, cfg.seed);
    Eigen::VectorXd grad;
    result.objective_history.reserve(static_cast<std::size_t>(cfg.steps) + 1);

    for (long t = 0;; ++t) {
        const double obj = objective_and_grad(spec, theta, dataset, cfg.l2_weight, grad);
        if (!std::isfinite(obj))
            throw training_diverged("objective became non-finite at step " + std::to_string(t), t);
        result.objective_history.push_back(obj);
        const double gnorm = grad.norm();
        if (t == cfg.steps || (cfg.grad_tolerance > 0.0 && gnorm <= cfg.grad_tolerance)) {
            result.steps_taken = t;
            result.model.final_grad_norm = gnorm;
            break;
        }
        theta -= cfg.learning_rate * grad;
    }
    result.model.params = std::move(theta);
    return result;
}

double loss(const TrainedModel& model, const Example& z) {
    check_example(model.spec, z);
    Forward f = forward(model.spec, model.params, z);
    return f.lse - f.u[z.label];
}

Eigen::VectorXd grad_loss(const TrainedModel& model, const Example& z) {
    check_example(model.spec, z);
    Forward f = forward(model.spec, model.params, z);
    Eigen::VectorXd g = f.p;
    g[z.label] -= 1.0;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(model.params.size());
    backward(model.spec, model.params, z, f, g, 1.0, out);
    return out;
}

double outcome_score(const TrainedModel& model, const Example& z) {
    check_example(model.spec, z);
    Forward f = forward(model.spec, model.params, z);
    return f.p[z.label];
}

Eigen::VectorXd grad_outcome(const TrainedModel& model, const Example& z) {
    check_example(model.spec, z);
    Forward f = forward(model.spec, model.params, z);
    // dF/du for F = p_y is p_y * (e_y - p).
    Eigen::VectorXd g = -f.p;
    g[z.label] += 1.0;
    g *= f.p[z.label];
    Eigen::VectorXd out = Eigen::VectorXd::Zero(model.params.size());
    backward(model.spec, model.params, z, f, g, 1.0, out);
    return out;
}

Eigen::VectorXd hvp(const TrainedModel& model, const Dataset& dataset, const Eigen::VectorXd& v) {
    if (v.size() != model.params.size())
        throw config_error("hvp vector size does not match parameter count");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(model.params.size());
    const double inv_n = 1.0 / static_cast<double>(dataset.size());
    for (const Example& z : dataset.examples) {
        check_example(model.spec, z);
        Forward f = forward(model.spec, model.params, z);
        hvp_example(model.spec, model.params, z, f, v, inv_n, out);
    }
    out += model.train_config.l2_weight * v;
    return out;
}

Eigen::VectorXd activation_grad_outcome(const TrainedModel& model, const Example& z,
                                        int token_pos) {
    if (model.spec.family != ModelFamily::embedbag)
        throw config_error("activation gradients need an embedbag model");
    check_example(model.spec, z);
    if (token_pos < 0 || token_pos >= static_cast<int>(z.tokens.size()))
        throw config_error("token position " + std::to_string(token_pos) +
                           " out of range for example " + std::to_string(z.id));
    Forward f = forward(model.spec, model.params, z);
    Eigen::VectorXd g = -f.p;
    g[z.label] += 1.0;
    g *= f.p[z.label];
    const Layout l = layout_of(model.spec);
    ConstMat w(model.params.data() + l.w2, model.spec.num_classes, model.spec.embed_dim);
    // Mean pooling spreads the same activation gradient over every position,
    // so the value does not depend on token_pos once it is in range.
    return (w.transpose() * g) / static_cast<double>(z.tokens.size());
}

Eigen::VectorXd mixed_grad_vec(const TrainedModel& model, const Example& z, int token_pos,
                               const Eigen::VectorXd& v) {
    if (v.size() != model.params.size())
        throw config_error("mixed_grad_vec vector size does not match parameter count");
    const double step = 1e-4 * (1.0 + v.lpNorm<Eigen::Infinity>());
    TrainedModel shifted = model;
    shifted.params = model.params + step * v;
    Eigen::VectorXd plus = activation_grad_outcome(shifted, z, token_pos);
    shifted.params = model.params - step * v;
    Eigen::VectorXd minus = activation_grad_outcome(shifted, z, token_pos);
    return (plus - minus) / (2.0 * step);
}

Eigen::VectorXd representation(const TrainedModel& model, const Example& z) {
    check_example(model.spec, z);
    return forward(model.spec, model.params, z).a;
}

int predict(const TrainedModel& model, const Example& z) {
    check_example(model.spec, z);
    Forward f = forward(model.spec, model.params, z);
    Eigen::Index best = 0;
    f.u.maxCoeff(&best);
    return static_cast<int>(best);
}

double mean_loss(const TrainedModel& model, const Dataset& dataset) {
    double total = 0.0;
    for (const Example& z : dataset.examples) total += loss(model, z);
    return total / static_cast<double>(dataset.size());
}

double clean_accuracy(const TrainedModel& model, const Dataset& dataset) {
    std::size_t hits = 0;
    for (const Example& z : dataset.examples) {
        if (predict(model, z) == z.label) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(dataset.size());
}

std::uint64_t model_hash(const TrainedModel& model) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const void* data, std::size_t n) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ULL;
        }
    };
    const int dims[6] = {static_cast<int>(model.spec.family), model.spec.num_classes,
                         model.spec.input_dim, model.spec.hidden_dim,
                         model.spec.vocab_size, model.spec.embed_dim};
    mix(dims, sizeof(dims));
    mix(model.params.data(), sizeof(double) * static_cast<std::size_t>(model.params.size()));
    return h;
}

} // namespace igd
