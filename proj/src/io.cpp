#include "ard/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ard {

namespace {

void write_matrix_rows(std::ostream& out, const Eigen::MatrixXd& m) {
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      if (c > 0) out << ' ';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

}  // namespace

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hash_vector(const Eigen::VectorXd& values) {
  std::string text;
  for (int i = 0; i < values.size(); ++i) {
    text += format_double(values(i));
    text += ',';
  }
  char buffer[24];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(fnv1a64(text)));
  return buffer;
}

void write_mdp(std::ostream& out, const TabularMdp& mdp) {
  out << "ard-mdp v1\n";
  out << "states " << mdp.n_states << '\n';
  out << "actions " << mdp.n_actions << '\n';
  out << "gamma " << format_double(mdp.gamma) << '\n';
  out << "horizon " << mdp.horizon << '\n';
  out << "section initial_dist\n";
  for (int s = 0; s < mdp.n_states; ++s) {
    if (s > 0) out << ' ';
    out << format_double(mdp.initial_dist(s));
  }
  out << '\n';
  out << "section transition\n";
  write_matrix_rows(out, mdp.transition);
  out << "section base_reward\n";
  write_matrix_rows(out, mdp.base_reward);
  out << "section terminal_mask\n";
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      if (a > 0) out << ' ';
      out << (mdp.is_terminal(s, a) ? 1 : 0);
    }
    out << '\n';
  }
  out << "end\n";
}

TabularMdp read_mdp(std::istream& in) {
  TokenReader reader(in);
  reader.expect("ard-mdp");
  reader.expect("v1");
  TabularMdp mdp;
  reader.expect("states");
  mdp.n_states = static_cast<int>(reader.next_int("states"));
  reader.expect("actions");
  mdp.n_actions = static_cast<int>(reader.next_int("actions"));
  reader.expect("gamma");
  mdp.gamma = reader.next_double("gamma");
  reader.expect("horizon");
  mdp.horizon = static_cast<int>(reader.next_int("horizon"));
  if (mdp.n_states < 1 || mdp.n_actions < 1)
    throw std::runtime_error("ard-mdp: states/actions must be >= 1");

  reader.expect("section");
  reader.expect("initial_dist");
  mdp.initial_dist.resize(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s)
    mdp.initial_dist(s) = reader.next_double("initial_dist");

  reader.expect("section");
  reader.expect("transition");
  mdp.transition.resize(mdp.n_states * mdp.n_actions, mdp.n_states);
  for (int i = 0; i < mdp.transition.rows(); ++i)
    for (int s2 = 0; s2 < mdp.n_states; ++s2)
      mdp.transition(i, s2) = reader.next_double("transition");

  reader.expect("section");
  reader.expect("base_reward");
  mdp.base_reward.resize(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a)
      mdp.base_reward(s, a) = reader.next_double("base_reward");

  reader.expect("section");
  reader.expect("terminal_mask");
  mdp.terminal.assign(static_cast<size_t>(mdp.n_states * mdp.n_actions), 0);
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      const long flag = reader.next_int("terminal_mask");
      if (flag != 0 && flag != 1)
        throw std::runtime_error("ard-mdp: terminal_mask entries must be 0/1");
      mdp.terminal[static_cast<size_t>(mdp.sa_index(s, a))] =
          static_cast<std::uint8_t>(flag);
    }
  }
  reader.expect("end");
  mdp.validate();
  return mdp;
}

void write_table(std::ostream& out, const Eigen::MatrixXd& table) {
  out << "ard-table v1\n";
  out << "rows " << table.rows() << '\n';
  out << "cols " << table.cols() << '\n';
  write_matrix_rows(out, table);
  out << "end\n";
}

Eigen::MatrixXd read_table(std::istream& in) {
  TokenReader reader(in);
  reader.expect("ard-table");
  reader.expect("v1");
  reader.expect("rows");
  const long rows = reader.next_int("rows");
  reader.expect("cols");
  const long cols = reader.next_int("cols");
  if (rows < 0 || cols < 0) throw std::runtime_error("ard-table: negative shape");
  Eigen::MatrixXd table(rows, cols);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) table(r, c) = reader.next_double("table entry");
  reader.expect("end");
  return table;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file for reading: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

void save_mdp(const std::string& path, const TabularMdp& mdp) {
  std::ostringstream out;
  write_mdp(out, mdp);
  write_text_file(path, out.str());
}

TabularMdp load_mdp(const std::string& path) {
  std::istringstream in(read_text_file(path));
  try {
    return read_mdp(in);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void save_table(const std::string& path, const Eigen::MatrixXd& table) {
  std::ostringstream out;
  write_table(out, table);
  write_text_file(path, out.str());
}

Eigen::MatrixXd load_table(const std::string& path) {
  std::istringstream in(read_text_file(path));
  try {
    return read_table(in);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace ard
