#pragma once

// Chart renderings: Graphviz DOT (one column of point nodes per lifeline,
// one labeled edge per message) and a plain-text grid.

#include <algorithm>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dfci/msc.hpp"

namespace dfci {

enum class RenderFormat { dot, ascii };

namespace detail {

inline std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

struct Row {
  enum class Kind { message, scene, note, open, close } kind;
  const MessageSpec* msg = nullptr;
  bool optional = false;
  std::string text;
  char gutter = '~';
};

inline void flatten_rows(const std::vector<Item>& items, bool in_opt, std::vector<Row>& rows) {
  for (const auto& item : items) {
    if (const auto* m = std::get_if<MessageSpec>(&item.node)) {
      rows.push_back({Row::Kind::message, m, in_opt || m->is_optional(), {}, ' '});
    } else if (const auto* s = std::get_if<Scene>(&item.node)) {
      rows.push_back({Row::Kind::scene, nullptr, false, s->name, ' '});
    } else if (const auto* n = std::get_if<Note>(&item.node)) {
      rows.push_back({Row::Kind::note, nullptr, false, n->text, ' '});
    } else if (const auto* f = std::get_if<Fragment>(&item.node)) {
      const bool loop = f->kind == FragmentKind::loop;
      std::string head = "opt";
      if (loop) {
        head = "loop (" + std::to_string(f->min_iter) + ".." +
               (f->max_iter == kUnbounded ? std::string("*") : std::to_string(f->max_iter)) + ")";
      }
      rows.push_back({Row::Kind::open, nullptr, false, head, loop ? '~' : '.'});
      flatten_rows(f->body, in_opt || !loop, rows);
      rows.push_back({Row::Kind::close, nullptr, false, {}, loop ? '~' : '.'});
    }
  }
}

inline std::string rtrim(std::string s) {
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

}  // namespace detail

inline std::string render_dot(const MscDocument& doc) {
  std::ostringstream os;
  std::vector<detail::Row> rows;
  detail::flatten_rows(doc.body, false, rows);

  auto node = [](const std::string& lane, std::size_t row) {
    return detail::dot_quote(lane + "." + std::to_string(row));
  };

  os << "digraph " << detail::dot_quote(doc.name) << " {\n";
  os << "  rankdir=TB;\n";
  os << "  node [shape=point, width=0.05];\n";
  os << "  edge [fontsize=10];\n";
  for (const auto& l : doc.lifelines) {
    os << "  " << node(l.id, 0) << " [shape=box, width=1.2, label="
       << detail::dot_quote(l.display_name.empty() ? l.id : l.display_name) << "];\n";
  }
  os << "  { rank=same;";
  for (const auto& l : doc.lifelines) os << ' ' << node(l.id, 0) << ';';
  os << " }\n";

  std::size_t row = 0;
  for (const auto& r : rows) {
    if (r.kind == detail::Row::Kind::scene) {
      os << "  // scene: " << r.text << "\n";
      continue;
    }
    if (r.kind != detail::Row::Kind::message) continue;
    ++row;
    os << "  { rank=same;";
    for (const auto& l : doc.lifelines) os << ' ' << node(l.id, row) << ';';
    os << " }\n";
    for (const auto& l : doc.lifelines) {
      os << "  " << node(l.id, row - 1) << " -> " << node(l.id, row)
         << " [arrowhead=none, style=dashed];\n";
    }
    const auto& m = *r.msg;
    os << "  " << node(resolve_lifeline(doc, m.from), row) << " -> "
       << node(resolve_lifeline(doc, m.to), row)
       << " [label=" << detail::dot_quote(m.msg_id + ": " + m.label)
       << (r.optional ? ", style=dotted" : "") << ", constraint=false];\n";
  }
  os << "}\n";
  return os.str();
}

inline std::string render_ascii(const MscDocument& doc) {
  std::vector<detail::Row> rows;
  detail::flatten_rows(doc.body, false, rows);

  std::size_t name_w = 1;
  for (const auto& l : doc.lifelines) name_w = std::max(name_w, l.id.size());
  std::size_t core_w = 0;
  for (const auto& r : rows) {
    if (r.kind == detail::Row::Kind::message) {
      core_w = std::max(core_w, r.msg->msg_id.size() + (r.optional ? 1 : 0) + 5);
    }
  }
  const std::size_t spacing = name_w + 2 + core_w;
  const std::size_t lanes = doc.lifelines.size();
  const std::size_t width = lanes == 0 ? 0 : (lanes - 1) * spacing + name_w;

  auto lane_of = [&](const std::string& name) {
    const std::string id = resolve_lifeline(doc, name);
    for (std::size_t i = 0; i < lanes; ++i) {
      if (doc.lifelines[i].id == id) return i;
    }
    return std::size_t{0};
  };
  auto blank = [&]() {
    std::string line(width, ' ');
    for (std::size_t i = 0; i < lanes; ++i) line[i * spacing] = '|';
    return line;
  };

  std::ostringstream os;
  {
    std::string header(width, ' ');
    for (std::size_t i = 0; i < lanes; ++i) {
      header.replace(i * spacing, doc.lifelines[i].id.size(), doc.lifelines[i].id);
    }
    os << detail::rtrim(header) << '\n' << detail::rtrim(blank()) << '\n';
  }

  for (const auto& r : rows) {
    switch (r.kind) {
      case detail::Row::Kind::scene:
        os << "== scene: " << r.text << " ==\n";
        break;
      case detail::Row::Kind::note:
        os << "note: " << r.text << '\n';
        break;
      case detail::Row::Kind::open: {
        std::string line = std::string(2, r.gutter) + " " + r.text + " ";
        if (line.size() < width) line.append(width - line.size(), r.gutter);
        os << line << '\n';
        break;
      }
      case detail::Row::Kind::close:
        os << std::string(std::max<std::size_t>(width, 4), r.gutter) << '\n';
        break;
      case detail::Row::Kind::message: {
        const auto& m = *r.msg;
        const std::size_t from = lane_of(m.from);
        const std::size_t to = lane_of(m.to);
        const std::size_t left = std::min(from, to);
        const std::size_t right = std::max(from, to);
        const std::string& left_name = doc.lifelines[left].id;
        const std::string& right_name = doc.lifelines[right].id;
        std::string line = blank();
        const std::size_t begin = left * spacing + left_name.size() + 1;
        const std::size_t end = right * spacing - 1;  // exclusive
        const std::string tag = m.msg_id + (r.optional ? "?" : "");
        const std::size_t extra = end - begin - (tag.size() + 5);
        const std::size_t lpad = extra / 2;
        const std::size_t rpad = extra - lpad;
        std::string arrow;
        if (from < to) {
          arrow = "--" + std::string(lpad, '-') + tag + std::string(rpad, '-') + "-->";
        } else {
          arrow = "<--" + std::string(lpad, '-') + tag + std::string(rpad, '-') + "--";
        }
        line.replace(left * spacing, left_name.size(), left_name);
        line.replace(begin - 1, 1, " ");
        line.replace(begin, arrow.size(), arrow);
        line.replace(end, 1, " ");
        line.replace(right * spacing, right_name.size(), right_name);
        line = detail::rtrim(line);
        if (!m.label.empty()) line += "   " + m.label;
        os << line << '\n';
        break;
      }
    }
  }
  return os.str();
}

inline std::string render(const MscDocument& doc, RenderFormat format) {
  return format == RenderFormat::dot ? render_dot(doc) : render_ascii(doc);
}

}  // namespace dfci
