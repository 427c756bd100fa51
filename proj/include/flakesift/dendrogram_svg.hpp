#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "flakesift/cluster.hpp"
#include "flakesift/io_util.hpp"

namespace flakesift {

namespace detail {

// Non-crossing leaf layout: DFS from the root, smaller child node first.
inline void leaf_order_visit(const Dendrogram& dg, std::size_t node, std::vector<std::size_t>& order) {
    const std::size_t n = dg.leaves.size();
    if (node < n) {
        order.push_back(node);
        return;
    }
    const Merge& m = dg.merges[node - n];
    leaf_order_visit(dg, m.left, order);
    leaf_order_visit(dg, m.right, order);
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace detail

// Deterministic dendrogram rendering: leaves along the x-axis, merge height
// on the y-axis, a dashed line at the cut threshold. Tests in non-singleton
// clusters get a distinct palette color; unclustered leaves stay blue.
inline std::string render_dendrogram_svg(const Dendrogram& dg, double threshold) {
    const std::size_t n = dg.leaves.size();

    std::vector<std::size_t> order;
    order.reserve(n);
    if (n == 1) {
        order.push_back(0);
    } else {
        detail::leaf_order_visit(dg, 2 * n - 2, order);
    }
    std::vector<double> leaf_x(n, 0.0);

    const double step = 28.0;
    const double margin_left = 50.0;
    const double margin_top = 20.0;
    const double plot_height = 360.0;
    const double label_band = 150.0;
    const double width = margin_left + step * static_cast<double>(n) + 20.0;
    const double height = margin_top + plot_height + label_band;

    for (std::size_t pos = 0; pos < n; ++pos) {
        leaf_x[order[pos]] = margin_left + step * (static_cast<double>(pos) + 0.5);
    }

    auto y_of = [&](double h) { return margin_top + plot_height * (1.0 - h); };

    // Color by cut membership; blue is reserved for unclustered leaves.
    const ConcreteClustering cc = cut(dg, threshold);
    std::vector<std::size_t> cluster_size(cc.cluster_count, 0);
    for (int c : cc.assignment) ++cluster_size[static_cast<std::size_t>(c)];
    static const char* kPalette[] = {"#d95f02", "#1b9e77", "#7570b3", "#e7298a",
                                     "#66a61e", "#e6ab02", "#a6761d", "#666666"};
    const std::string kUnclustered = "#4878cf";
    std::map<int, std::string> cluster_color;
    int next_color = 0;
    for (std::size_t pos = 0; pos < n; ++pos) {
        const int c = cc.assignment[order[pos]];
        if (cluster_size[static_cast<std::size_t>(c)] < 2) continue;
        if (cluster_color.find(c) == cluster_color.end()) {
            cluster_color[c] = kPalette[next_color % 8];
            ++next_color;
        }
    }
    auto leaf_color = [&](std::size_t leaf) -> std::string {
        const int c = cc.assignment[leaf];
        auto it = cluster_color.find(c);
        return it == cluster_color.end() ? kUnclustered : it->second;
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_double(width) +
           "\" height=\"" + format_double(height) + "\" data-schema-version=\"1\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // Bracket per merge. x of an internal node = midpoint of its children.
    std::vector<double> node_x(2 * n - 1, 0.0);
    std::vector<double> node_h(2 * n - 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) node_x[i] = leaf_x[i];
    for (std::size_t k = 0; k < dg.merges.size(); ++k) {
        const Merge& m = dg.merges[k];
        const double xl = node_x[m.left];
        const double xr = node_x[m.right];
        const double hl = node_h[m.left];
        const double hr = node_h[m.right];
        node_x[n + k] = (xl + xr) / 2.0;
        node_h[n + k] = m.height;
        // Bracket color: cluster color if the merge lies within one cut
        // cluster, neutral otherwise.
        std::string stroke = "#888888";
        if (m.height <= threshold) {
            std::size_t probe = m.left;
            while (probe >= n) probe = dg.merges[probe - n].left;
            stroke = leaf_color(probe);
        }
        svg += "<path fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"1.5\" d=\"M " +
               format_double(xl) + " " + format_double(y_of(hl)) + " L " + format_double(xl) + " " +
               format_double(y_of(m.height)) + " L " + format_double(xr) + " " +
               format_double(y_of(m.height)) + " L " + format_double(xr) + " " +
               format_double(y_of(hr)) + "\"/>\n";
    }

    // Threshold line; negative threshold means "no cut selected".
    if (threshold >= 0.0) {
        svg += "<line x1=\"" + format_double(margin_left - 10.0) + "\" y1=\"" + format_double(y_of(threshold)) +
               "\" x2=\"" + format_double(width - 10.0) + "\" y2=\"" + format_double(y_of(threshold)) +
               "\" stroke=\"black\" stroke-dasharray=\"6 4\" stroke-width=\"1\"/>\n";
    }

    // Axis ticks at 0, 0.5, 1.
    for (double tick : {0.0, 0.5, 1.0}) {
        svg += "<text x=\"4\" y=\"" + format_double(y_of(tick) + 4.0) +
               "\" font-size=\"11\" font-family=\"sans-serif\">" + format_double(tick) + "</text>\n";
    }

    // Leaf markers and rotated labels.
    for (std::size_t pos = 0; pos < n; ++pos) {
        const std::size_t leaf = order[pos];
        const double x = leaf_x[leaf];
        const double y0 = y_of(0.0);
        svg += "<circle cx=\"" + format_double(x) + "\" cy=\"" + format_double(y0) +
               "\" r=\"3\" fill=\"" + leaf_color(leaf) + "\"/>\n";
        svg += "<text x=\"" + format_double(x) + "\" y=\"" + format_double(y0 + 12.0) +
               "\" font-size=\"10\" font-family=\"monospace\" transform=\"rotate(60 " +
               format_double(x) + " " + format_double(y0 + 12.0) + ")\">" +
               detail::xml_escape(dg.leaves[leaf].name()) + "</text>\n";
    }

    svg += "</svg>\n";
    return svg;
}

}  // namespace flakesift
