#include "geoball/viz.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace geoball {

std::array<double, 2> Projection2d::apply(std::span<const double> x) const
{
    require_same_dim(x.size(), mean.size(), "projection");
    std::array<double, 2> p{0.0, 0.0};
    for (std::size_t k = 0; k < 2; ++k) {
        for (std::size_t i = 0; i < x.size(); ++i) p[k] += axes[k][i] * (x[i] - mean[i]);
    }
    return p;
}

namespace {

Vec unit(std::size_t dim, std::size_t i)
{
    Vec v(dim, 0.0);
    if (i < dim) v[i] = 1.0;
    return v;
}

std::vector<std::size_t> resolve(const BallSpace& space, std::span<const std::string> selected)
{
    if (selected.empty()) throw std::invalid_argument("render needs at least one concept");
    std::vector<std::size_t> idx;
    for (const auto& s : selected) idx.push_back(space.index(s));
    return idx;
}

}  // namespace

Projection2d principal_projection(const BallSpace& space, std::span<const std::string> selected)
{
    const auto idx = resolve(space, selected);
    const auto dim = space.dim();
    Projection2d proj;
    if (dim == 2) {
        proj.mean.assign(2, 0.0);
        proj.axes = {unit(2, 0), unit(2, 1)};
        return proj;
    }

    const auto m = static_cast<Eigen::Index>(idx.size());
    const auto n = static_cast<Eigen::Index>(dim);
    Eigen::MatrixXd x(m, n);
    for (Eigen::Index r = 0; r < m; ++r) {
        const auto c = space.centre(idx[static_cast<std::size_t>(r)]);
        for (Eigen::Index k = 0; k < n; ++k) x(r, k) = c[static_cast<std::size_t>(k)];
    }
    const Eigen::RowVectorXd mean = x.colwise().mean();
    proj.mean.assign(mean.data(), mean.data() + n);
    x.rowwise() -= mean;

    const Eigen::MatrixXd cov = x.transpose() * x;
    const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    if (m < 2 || cov.cwiseAbs().maxCoeff() <= 1e-12 * scale) {
        proj.axes = {unit(dim, 0), unit(dim, 1)};
        return proj;
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    for (std::size_t k = 0; k < 2 && k < dim; ++k) {
        Eigen::VectorXd v = eig.eigenvectors().col(n - 1 - static_cast<Eigen::Index>(k));
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        proj.axes[k].assign(v.data(), v.data() + n);
    }
    if (dim < 2) proj.axes[1] = Vec(dim, 0.0);
    return proj;
}

namespace {

std::string num(double v)
{
    if (std::abs(v) < 5e-4) v = 0.0;
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 3);
    std::string s(buf, res.ptr);
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
    return s;
}

std::string escape(std::string_view text)
{
    std::string out;
    for (char ch : text) {
        switch (ch) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += ch;
        }
    }
    return out;
}

constexpr std::array<const char*, 10> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

std::string render_balls_2d(const BallSpace& space, std::span<const std::string> selected,
                            std::span<const LabeledPoint> points)
{
    const auto idx = resolve(space, selected);
    const auto proj = principal_projection(space, selected);

    struct Circle {
        std::array<double, 2> p;
        double r;
        std::string name;
    };
    std::vector<Circle> circles;
    for (std::size_t i : idx) circles.push_back({proj.apply(space.centre(i)), space.radius(i), space.name(i)});
    std::vector<std::array<double, 2>> dots;
    for (const auto& pt : points) dots.push_back(proj.apply(pt.h));

    double lo_x = std::numeric_limits<double>::infinity(), lo_y = lo_x;
    double hi_x = -lo_x, hi_y = -lo_x;
    auto extend = [&](std::array<double, 2> p, double r) {
        lo_x = std::min(lo_x, p[0] - r);
        hi_x = std::max(hi_x, p[0] + r);
        lo_y = std::min(lo_y, p[1] - r);
        hi_y = std::max(hi_y, p[1] + r);
    };
    for (const auto& c : circles) extend(c.p, c.r);
    for (const auto& d : dots) extend(d, 0.0);

    constexpr double size = 640.0, margin = 40.0, legend = 60.0;
    const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-9});
    const double s = (size - 2 * margin) / span;
    const double off_x = margin + ((size - 2 * margin) - (hi_x - lo_x) * s) / 2;
    const double off_y = margin + ((size - 2 * margin) - (hi_y - lo_y) * s) / 2;
    auto sx = [&](double x) { return off_x + (x - lo_x) * s; };
    auto sy = [&](double y) { return off_y + (hi_y - y) * s; };

    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(size) + "\" height=\"" + num(size + legend) +
           "\" viewBox=\"0 0 " + num(size) + " " + num(size + legend) + "\">\n";
    out += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    std::vector<std::size_t> order(circles.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return circles[a].r > circles[b].r; });
    out += "  <g id=\"balls\" fill=\"none\" stroke-width=\"1.5\">\n";
    for (std::size_t k : order) {
        const auto& c = circles[k];
        const char* colour = kPalette[k % kPalette.size()];
        out += "    <circle cx=\"" + num(sx(c.p[0])) + "\" cy=\"" + num(sy(c.p[1])) + "\" r=\"" + num(c.r * s) +
               "\" stroke=\"" + colour + "\"><title>" + escape(c.name) + "</title></circle>\n";
        out += "    <text x=\"" + num(sx(c.p[0])) + "\" y=\"" + num(sy(c.p[1] + c.r) - 4) +
               "\" font-size=\"11\" text-anchor=\"middle\" fill=\"" + colour + "\" stroke=\"none\">" +
               escape(c.name) + "</text>\n";
    }
    out += "  </g>\n";

    if (!dots.empty()) {
        std::map<std::string, std::size_t> colour_of;
        for (const auto& pt : points) colour_of.emplace(pt.label, 0);
        std::size_t next = 0;
        for (auto& [label, colour] : colour_of) colour = next++;
        out += "  <g id=\"points\" stroke=\"none\">\n";
        for (std::size_t i = 0; i < dots.size(); ++i) {
            out += "    <circle cx=\"" + num(sx(dots[i][0])) + "\" cy=\"" + num(sy(dots[i][1])) +
                   "\" r=\"2.5\" fill=\"" + kPalette[colour_of[points[i].label] % kPalette.size()] + "\"><title>" +
                   escape(points[i].label) + "</title></circle>\n";
        }
        out += "  </g>\n";
    }

    const std::string how = space.dim() == 2 ? "identity projection" : "top-2 principal components of centres";
    out += "  <text x=\"" + num(margin) + "\" y=\"" + num(size + 20) + "\" font-size=\"12\">" + how + ", " +
           std::to_string(space.dim()) + "-d space</text>\n";
    out += "  <text x=\"" + num(margin) + "\" y=\"" + num(size + 40) +
           "\" font-size=\"12\">radii drawn at true length; containment in this plane is indicative, not exact</text>\n";
    out += "</svg>\n";
    return out;
}

}  // namespace geoball
