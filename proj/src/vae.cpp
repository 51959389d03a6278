#include <latentbo/vae.hpp>

#include <latentbo/gp.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace latentbo::vae {

VaeModel::VaeModel(int ambient_dim, int hidden, int latent_dim, std::uint64_t seed)
    : encoder_({ambient_dim, hidden, 2 * latent_dim}, seed),
      decoder_({latent_dim, hidden, ambient_dim}, seed + 0x9e37) {}

VaeModel::VaeModel(nn::Mlp encoder, nn::Mlp decoder)
    : encoder_(std::move(encoder)), decoder_(std::move(decoder)) {
    if (encoder_.output_size() != 2 * decoder_.input_size() ||
        encoder_.input_size() != decoder_.output_size()) {
        throw InputError("VaeModel: encoder must emit 2d outputs for a d-dimensional decoder");
    }
}

Encoding VaeModel::encode(const Matrix& xs) const {
    const Matrix out = encoder_.forward(xs).output();
    const int d = latent_dim();
    return {out.topRows(d), out.bottomRows(d)};
}

Vector VaeModel::encode_mean(const Vector& x) const {
    return encoder_(x).head(latent_dim());
}

Matrix VaeModel::decode(const Matrix& zs) const {
    if (zs.rows() != latent_dim()) {
        throw InputError("VaeModel::decode: latent dimension mismatch");
    }
    return decoder_.forward(zs).output().cwiseMax(-3.0).cwiseMin(3.0);
}

Vector VaeModel::decode(const Vector& z) const { return decode(Matrix(z)).col(0); }

Vector VaeModel::parameters() const {
    Vector out(encoder_.parameter_count() + decoder_.parameter_count());
    out << encoder_.parameters(), decoder_.parameters();
    return out;
}

void VaeModel::set_parameters(const Vector& flat) {
    const Eigen::Index ne = encoder_.parameter_count();
    if (flat.size() != ne + decoder_.parameter_count()) {
        throw InputError("VaeModel::set_parameters: wrong parameter count");
    }
    encoder_.set_parameters(flat.head(ne));
    decoder_.set_parameters(flat.tail(flat.size() - ne));
}

nlohmann::json VaeModel::to_json() const {
    return {{"ambient_dim", ambient_dim()},
            {"latent_dim", latent_dim()},
            {"encoder", encoder_.to_json()},
            {"decoder", decoder_.to_json()}};
}

VaeModel VaeModel::from_json(const nlohmann::json& j) {
    return VaeModel(nn::Mlp::from_json(j.at("encoder")), nn::Mlp::from_json(j.at("decoder")));
}

Vector reparam_sample(const Vector& mu, const Vector& logvar, std::uint64_t seed) {
    if (mu.size() != logvar.size()) {
        throw InputError("reparam_sample: mu and logvar differ in length");
    }
    Rng rng = make_rng(seed, 0x7e);
    const Matrix xi = gaussian_matrix(mu.size(), 1, rng);
    return mu + ((0.5 * logvar.array()).exp() * xi.col(0).array()).matrix();
}

double kl_divergence(const Vector& mu, const Vector& logvar) {
    return 0.5 * (mu.array().square() + logvar.array().exp() - logvar.array() - 1.0).sum();
}

namespace {

double f_nu(double a, double nu) { return std::tanh(a / (2.0 * nu)); }

double p_norm(const Vector& u, double p) {
    if (p == 2.0) {
        return u.norm();
    }
    return std::pow(u.array().abs().pow(p).sum(), 1.0 / p);
}

// d||u||_p / du; zero at the origin.
Vector p_norm_grad(const Vector& u, double norm, double p) {
    if (norm <= 0.0) {
        return Vector::Zero(u.size());
    }
    if (p == 2.0) {
        return u / norm;
    }
    return (u.array().sign() * u.array().abs().pow(p - 1.0) / std::pow(norm, p - 1.0)).matrix();
}

double triplet_weight(double f_i, double f_j, double f_k, const TripletParams& p) {
    const double dp = std::abs(f_i - f_j);
    const double dn = std::abs(f_i - f_k);
    if (!(dp < p.eta_threshold && dn >= p.eta_threshold)) {
        return 0.0;
    }
    const double w_ij = f_nu(p.eta_threshold - dp, p.nu) / f_nu(p.eta_threshold, p.nu);
    const double w_ik = f_nu(dn - p.eta_threshold, p.nu) / f_nu(1.0 - p.eta_threshold, p.nu);
    return w_ij * w_ik;
}

struct TripletTerm {
    const std::span<const double>* values;
    const TripletParams* params;
    const std::vector<Triplet>* triplets;
};

LossResult loss_impl(const VaeModel& vae, const Matrix& batch, double beta, const Matrix& noise,
                     const TripletTerm* triplet) {
    const Eigen::Index n = batch.cols();
    const int d = vae.latent_dim();
    if (n < 1) {
        throw InputError("VAE loss: empty batch");
    }
    if (batch.rows() != vae.ambient_dim() || noise.rows() != d || noise.cols() != n) {
        throw InputError("VAE loss: batch or noise shape mismatch");
    }
    const double inv_n = 1.0 / static_cast<double>(n);

    const nn::Tape enc_tape = vae.encoder().forward(batch);
    const Matrix mu = enc_tape.output().topRows(d);
    const Matrix logvar = enc_tape.output().bottomRows(d);
    const Matrix sigma = (0.5 * logvar.array()).exp().matrix();
    const Matrix z = mu + sigma.cwiseProduct(noise);

    const nn::Tape dec_tape = vae.decoder().forward(z);
    const Matrix residual = dec_tape.output() - batch;

    LossResult r;
    r.reconstruction = 0.5 * residual.squaredNorm() * inv_n;
    r.kl = 0.5 * (mu.array().square() + logvar.array().exp() - logvar.array() - 1.0).sum() * inv_n;

    const nn::MlpGradients dec_grad = vae.decoder().backward(dec_tape, residual * inv_n);
    Matrix dz = dec_grad.input;

    if (triplet != nullptr && !triplet->triplets->empty()) {
        const auto& vals = *triplet->values;
        const TripletParams& p = *triplet->params;
        Matrix dz_trip = Matrix::Zero(d, n);
        double total = 0.0;
        for (const Triplet& t : *triplet->triplets) {
            const double w = triplet_weight(vals[t.base], vals[t.positive], vals[t.negative], p);
            if (w == 0.0) {
                continue;
            }
            const Vector u_pos = z.col(t.base) - z.col(t.positive);
            const Vector u_neg = z.col(t.base) - z.col(t.negative);
            const double d_pos = p_norm(u_pos, p.norm_p);
            const double d_neg = p_norm(u_neg, p.norm_p);
            total += nn::softplus(d_pos - d_neg) * w;
            const double s = nn::sigmoid(d_pos - d_neg) * w * inv_n;
            const Vector g_pos = p_norm_grad(u_pos, d_pos, p.norm_p);
            const Vector g_neg = p_norm_grad(u_neg, d_neg, p.norm_p);
            dz_trip.col(t.base) += s * (g_pos - g_neg);
            dz_trip.col(t.positive) -= s * g_pos;
            dz_trip.col(t.negative) += s * g_neg;
        }
        r.triplet = total * inv_n;
        dz += dz_trip;
    }

    Matrix d_enc(2 * d, n);
    d_enc.topRows(d) = dz + beta * inv_n * mu;
    d_enc.bottomRows(d) = (dz.array() * 0.5 * sigma.array() * noise.array() +
                           beta * inv_n * 0.5 * (logvar.array().exp() - 1.0))
                              .matrix();
    const nn::MlpGradients enc_grad = vae.encoder().backward(enc_tape, d_enc);

    r.loss = r.reconstruction + beta * r.kl + r.triplet;
    const Vector ge = enc_grad.flat();
    const Vector gd = dec_grad.flat();
    r.gradient.resize(ge.size() + gd.size());
    r.gradient << ge, gd;
    return r;
}

Matrix draw_noise(int rows, Eigen::Index cols, std::uint64_t seed) {
    Rng rng = make_rng(seed, 0x7e);
    return gaussian_matrix(rows, cols, rng);
}

} // namespace

LossResult elbo_loss(const VaeModel& vae, const Matrix& batch, double beta, const Matrix& noise) {
    return loss_impl(vae, batch, beta, noise, nullptr);
}

LossResult elbo_loss(const VaeModel& vae, const Matrix& batch, double beta, std::uint64_t seed) {
    return elbo_loss(vae, batch, beta, draw_noise(vae.latent_dim(), batch.cols(), seed));
}

double soft_triplet_loss(const Vector& z_i, const Vector& z_j, const Vector& z_k, double f_i,
                         double f_j, double f_k, const TripletParams& params) {
    const double w = triplet_weight(f_i, f_j, f_k, params);
    if (w == 0.0) {
        return 0.0;
    }
    const double d_pos = p_norm(z_i - z_j, params.norm_p);
    const double d_neg = p_norm(z_i - z_k, params.norm_p);
    return nn::softplus(d_pos - d_neg) * w;
}

std::vector<Triplet> mine_triplets(std::span<const double> values, const TripletParams& params,
                                   std::uint64_t seed, int cap) {
    Rng rng = make_rng(seed, 0x3c);
    std::vector<Triplet> out;
    const int n = static_cast<int>(values.size());
    std::vector<int> pos;
    std::vector<int> neg;
    for (int i = 0; i < n; ++i) {
        pos.clear();
        neg.clear();
        for (int j = 0; j < n; ++j) {
            const double gap = std::abs(values[i] - values[j]);
            if (gap >= params.eta_threshold) {
                neg.push_back(j);
            } else if (j != i) {
                pos.push_back(j);
            }
        }
        if (pos.empty() || neg.empty()) {
            continue;
        }
        const long pairs = static_cast<long>(pos.size()) * static_cast<long>(neg.size());
        if (pairs <= cap) {
            for (int j : pos) {
                for (int k : neg) {
                    out.push_back({i, j, k});
                }
            }
            continue;
        }
        // Floyd's algorithm: `cap` distinct pair indices out of `pairs`.
        std::set<long> chosen;
        for (long r = pairs - cap; r < pairs; ++r) {
            std::uniform_int_distribution<long> pick(0, r);
            const long t = pick(rng);
            chosen.insert(chosen.contains(t) ? r : t);
        }
        for (long c : chosen) {
            out.push_back({i, pos[static_cast<std::size_t>(c / static_cast<long>(neg.size()))],
                           neg[static_cast<std::size_t>(c % static_cast<long>(neg.size()))]});
        }
    }
    return out;
}

LossResult dml_elbo_loss(const VaeModel& vae, const Matrix& batch, std::span<const double> values,
                         const TripletParams& params, const Matrix& noise,
                         const std::vector<Triplet>& triplets) {
    if (batch.cols() < 3) {
        throw InputError("dml_elbo_loss: need at least 3 points per batch");
    }
    if (static_cast<Eigen::Index>(values.size()) != batch.cols()) {
        throw InputError("dml_elbo_loss: one value per point required");
    }
    const TripletTerm term{&values, &params, &triplets};
    return loss_impl(vae, batch, 1.0, noise, &term);
}

LossResult dml_elbo_loss(const VaeModel& vae, const Matrix& batch, std::span<const double> values,
                         const TripletParams& params, std::uint64_t seed) {
    if (batch.cols() < 3) {
        throw InputError("dml_elbo_loss: need at least 3 points per batch");
    }
    return dml_elbo_loss(vae, batch, values, params,
                         draw_noise(vae.latent_dim(), batch.cols(), seed),
                         mine_triplets(values, params, seed));
}

double AnnealSchedule::beta_at(int epoch) const {
    const double steps = std::floor(static_cast<double>(epoch) / static_cast<double>(step_epochs));
    return std::min(beta_final, beta_init + beta_add * steps);
}

namespace {

void check_finite(const LossResult& r, const char* stage, int epoch, int step) {
    if (!std::isfinite(r.loss) || !r.gradient.allFinite()) {
        std::ostringstream msg;
        msg << stage << ": non-finite loss at epoch " << epoch << ", step " << step
            << " (reconstruction=" << r.reconstruction << ", kl=" << r.kl
            << ", triplet=" << r.triplet << ")";
        throw NumericalError(msg.str());
    }
}

Matrix gather(const Matrix& data, std::span<const std::size_t> idx) {
    Matrix out(data.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) {
        out.col(static_cast<Eigen::Index>(j)) = data.col(static_cast<Eigen::Index>(idx[j]));
    }
    return out;
}

} // namespace

VaeModel pretrain(const VaeModel& vae, const Matrix& data, const AnnealSchedule& schedule,
                  const TrainOptions& options, std::uint64_t seed) {
    if (data.rows() != vae.ambient_dim() || data.cols() < 1) {
        throw InputError("pretrain: data must be non-empty with D rows");
    }
    VaeModel model = vae;
    Vector params = model.parameters();
    nn::AdamState adam;
    adam.lr = options.lr;
    Rng order_rng = make_rng(seed, 0x0d);
    Rng noise_rng = make_rng(seed, 0x0e);
    std::vector<std::size_t> order(static_cast<std::size_t>(data.cols()));
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto batch = static_cast<std::size_t>(std::max(options.batch_size, 1));

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        const double beta = schedule.beta_at(epoch);
        std::shuffle(order.begin(), order.end(), order_rng);
        int step = 0;
        for (std::size_t start = 0; start < order.size(); start += batch, ++step) {
            const std::size_t len = std::min(batch, order.size() - start);
            const Matrix xb = gather(data, std::span(order).subspan(start, len));
            const Matrix noise = gaussian_matrix(model.latent_dim(), xb.cols(), noise_rng);
            const LossResult r = elbo_loss(model, xb, beta, noise);
            check_finite(r, "pretrain", epoch, step);
            nn::adam_step(params, r.gradient, adam);
            model.set_parameters(params);
        }
    }
    return model;
}

VaeModel retrain(const VaeModel& vae, const testbed::LabelledDataset& labelled, bool use_dml,
                 const TripletParams& params, const TrainOptions& options, std::uint64_t seed) {
    if (labelled.size() == 0 || labelled.values.size() != labelled.points.size()) {
        throw InputError("retrain: labelled set must be non-empty");
    }
    const Matrix data = gp::to_matrix(labelled.points);
    if (data.rows() != vae.ambient_dim()) {
        throw InputError("retrain: labelled points have the wrong dimension");
    }
    std::vector<double> norm(labelled.values.size(), 0.0);
    if (use_dml) {
        const auto [lo, hi] = std::minmax_element(labelled.values.begin(), labelled.values.end());
        const double span = *hi - *lo;
        for (std::size_t i = 0; i < norm.size(); ++i) {
            norm[i] = span > 0.0 ? (labelled.values[i] - *lo) / span : 0.0;
        }
    }

    VaeModel model = vae;
    Vector flat = model.parameters();
    nn::AdamState adam;
    adam.lr = options.lr;
    Rng order_rng = make_rng(seed, 0x0d);
    Rng noise_rng = make_rng(seed, 0x0e);
    Rng triplet_rng = make_rng(seed, 0x0f);
    std::vector<std::size_t> order(labelled.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto batch = static_cast<std::size_t>(std::max(options.batch_size, 1));

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), order_rng);
        int step = 0;
        for (std::size_t start = 0; start < order.size(); start += batch, ++step) {
            const std::size_t len = std::min(batch, order.size() - start);
            const auto idx = std::span(order).subspan(start, len);
            const Matrix xb = gather(data, idx);
            const Matrix noise = gaussian_matrix(model.latent_dim(), xb.cols(), noise_rng);
            const std::uint64_t triplet_seed = triplet_rng();
            LossResult r;
            if (use_dml && len >= 3) {
                std::vector<double> vb(len);
                for (std::size_t j = 0; j < len; ++j) {
                    vb[j] = norm[idx[j]];
                }
                r = dml_elbo_loss(model, xb, vb, params, noise,
                                  mine_triplets(vb, params, triplet_seed));
            } else {
                r = elbo_loss(model, xb, 1.0, noise);
            }
            check_finite(r, "retrain", epoch, step);
            nn::adam_step(flat, r.gradient, adam);
            model.set_parameters(flat);
        }
    }
    return model;
}

} // namespace latentbo::vae
