#include "gapcast/text.hpp"

#include "gapcast/util.hpp"

#include <cctype>
#include <cstring>

namespace gapcast {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

namespace {

/* Porter (1980), including the bli->ble and logi->log revisions from the
   author's reference implementation. Operates in place on `b[0..k]`. */
class Porter {
 public:
  explicit Porter(std::string word) : b_(std::move(word)) {}

  std::string run() {
    if (b_.size() <= 2) return b_;
    k_ = static_cast<int>(b_.size()) - 1;
    step1ab();
    step1c();
    step2();
    step3();
    step4();
    step5();
    b_.resize(k_ + 1);
    return b_;
  }

 private:
  std::string b_;
  int k_ = 0, j_ = 0;

  bool cons(int i) const {
    switch (b_[i]) {
      case 'a': case 'e': case 'i': case 'o': case 'u':
        return false;
      case 'y':
        return i == 0 ? true : !cons(i - 1);
      default:
        return true;
    }
  }

  /* Number of consonant-vowel-consonant passages in b[0..j]. */
  int m() const {
    int n = 0, i = 0;
    while (true) {
      if (i > j_) return n;
      if (!cons(i)) break;
      ++i;
    }
    ++i;
    while (true) {
      while (true) {
        if (i > j_) return n;
        if (cons(i)) break;
        ++i;
      }
      ++i;
      ++n;
      while (true) {
        if (i > j_) return n;
        if (!cons(i)) break;
        ++i;
      }
      ++i;
    }
  }

  bool vowel_in_stem() const {
    for (int i = 0; i <= j_; ++i)
      if (!cons(i)) return true;
    return false;
  }

  bool double_consonant(int j) const {
    if (j < 1) return false;
    if (b_[j] != b_[j - 1]) return false;
    return cons(j);
  }

  /* consonant - vowel - consonant, final consonant not w, x or y. */
  bool cvc(int i) const {
    if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
    const char ch = b_[i];
    return ch != 'w' && ch != 'x' && ch != 'y';
  }

  bool ends(const char* s) {
    const int len = static_cast<int>(std::strlen(s));
    if (len > k_ + 1) return false;
    if (b_.compare(k_ - len + 1, len, s) != 0) return false;
    j_ = k_ - len;
    return true;
  }

  void set_to(const char* s) {
    const int len = static_cast<int>(std::strlen(s));
    b_.replace(j_ + 1, b_.size() - j_ - 1, s);
    k_ = j_ + len;
  }

  void replace_if_m(const char* s) {
    if (m() > 0) set_to(s);
  }

  void step1ab() {
    if (b_[k_] == 's') {
      if (ends("sses")) k_ -= 2;
      else if (ends("ies")) set_to("i");
      else if (b_[k_ - 1] != 's') --k_;
    }
    if (ends("eed")) {
      if (m() > 0) --k_;
    } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
      k_ = j_;
      if (ends("at")) set_to("ate");
      else if (ends("bl")) set_to("ble");
      else if (ends("iz")) set_to("ize");
      else if (double_consonant(k_)) {
        --k_;
        const char ch = b_[k_];
        if (ch == 'l' || ch == 's' || ch == 'z') ++k_;
      } else if (m() == 1 && cvc(k_)) {
        set_to("e");
      }
    }
  }

  void step1c() {
    if (ends("y") && vowel_in_stem()) b_[k_] = 'i';
  }

  void step2() {
    if (k_ < 1) return;
    switch (b_[k_ - 1]) {
      case 'a':
        if (ends("ational")) { replace_if_m("ate"); break; }
        if (ends("tional")) { replace_if_m("tion"); break; }
        break;
      case 'c':
        if (ends("enci")) { replace_if_m("ence"); break; }
        if (ends("anci")) { replace_if_m("ance"); break; }
        break;
      case 'e':
        if (ends("izer")) { replace_if_m("ize"); break; }
        break;
      case 'l':
        if (ends("bli")) { replace_if_m("ble"); break; }
        if (ends("alli")) { replace_if_m("al"); break; }
        if (ends("entli")) { replace_if_m("ent"); break; }
        if (ends("eli")) { replace_if_m("e"); break; }
        if (ends("ousli")) { replace_if_m("ous"); break; }
        break;
      case 'o':
        if (ends("ization")) { replace_if_m("ize"); break; }
        if (ends("ation")) { replace_if_m("ate"); break; }
        if (ends("ator")) { replace_if_m("ate"); break; }
        break;
      case 's':
        if (ends("alism")) { replace_if_m("al"); break; }
        if (ends("iveness")) { replace_if_m("ive"); break; }
        if (ends("fulness")) { replace_if_m("ful"); break; }
        if (ends("ousness")) { replace_if_m("ous"); break; }
        break;
      case 't':
        if (ends("aliti")) { replace_if_m("al"); break; }
        if (ends("iviti")) { replace_if_m("ive"); break; }
        if (ends("biliti")) { replace_if_m("ble"); break; }
        break;
      case 'g':
        if (ends("logi")) { replace_if_m("log"); break; }
        break;
      default:
        break;
    }
  }

  void step3() {
    switch (b_[k_]) {
      case 'e':
        if (ends("icate")) { replace_if_m("ic"); break; }
        if (ends("ative")) { replace_if_m(""); break; }
        if (ends("alize")) { replace_if_m("al"); break; }
        break;
      case 'i':
        if (ends("iciti")) { replace_if_m("ic"); break; }
        break;
      case 'l':
        if (ends("ical")) { replace_if_m("ic"); break; }
        if (ends("ful")) { replace_if_m(""); break; }
        break;
      case 's':
        if (ends("ness")) { replace_if_m(""); break; }
        break;
      default:
        break;
    }
  }

  void step4() {
    if (k_ < 1) return;
    switch (b_[k_ - 1]) {
      case 'a': if (ends("al")) break; return;
      case 'c': if (ends("ance") || ends("ence")) break; return;
      case 'e': if (ends("er")) break; return;
      case 'i': if (ends("ic")) break; return;
      case 'l': if (ends("able") || ends("ible")) break; return;
      case 'n':
        if (ends("ant") || ends("ement") || ends("ment") || ends("ent")) break;
        return;
      case 'o':
        if (ends("ion") && j_ >= 0 && (b_[j_] == 's' || b_[j_] == 't')) break;
        if (ends("ou")) break;
        return;
      case 's': if (ends("ism")) break; return;
      case 't': if (ends("ate") || ends("iti")) break; return;
      case 'u': if (ends("ous")) break; return;
      case 'v': if (ends("ive")) break; return;
      case 'z': if (ends("ize")) break; return;
      default: return;
    }
    if (m() > 1) k_ = j_;
  }

  void step5() {
    j_ = k_;
    if (b_[k_] == 'e') {
      const int a = m();
      if (a > 1 || (a == 1 && !cvc(k_ - 1))) --k_;
    }
    if (b_[k_] == 'l' && double_consonant(k_) && m() > 1) --k_;
  }
};

}  // namespace

std::string porter_stem(const std::string& word) {
  return Porter(word).run();
}

const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = {
      "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you",
      "your", "yours", "yourself", "yourselves", "he", "him", "his",
      "himself", "she", "her", "hers", "herself", "it", "its", "itself",
      "they", "them", "their", "theirs", "themselves", "what", "which",
      "who", "whom", "this", "that", "these", "those", "am", "is", "are",
      "was", "were", "be", "been", "being", "have", "has", "had", "having",
      "do", "does", "did", "doing", "a", "an", "the", "and", "but", "if",
      "or", "because", "as", "until", "while", "of", "at", "by", "for",
      "with", "about", "against", "between", "into", "through", "during",
      "before", "after", "above", "below", "to", "from", "up", "down", "in",
      "out", "on", "off", "over", "under", "again", "further", "then",
      "once", "here", "there", "when", "where", "why", "how", "all", "any",
      "both", "each", "few", "more", "most", "other", "some", "such", "no",
      "nor", "not", "only", "own", "same", "so", "than", "too", "very", "s",
      "t", "can", "will", "just", "don", "should", "now"};
  return words;
}

std::vector<std::string> preprocess_text(const std::string& text) {
  const auto& stops = stopwords();
  std::vector<std::string> stems;
  for (const auto& token : tokenize(text)) {
    if (stops.count(token)) continue;
    stems.push_back(porter_stem(token));
  }
  std::vector<std::string> out = stems;
  for (size_t i = 0; i + 1 < stems.size(); ++i)
    out.push_back(stems[i] + "_" + stems[i + 1]);
  return out;
}

const std::vector<std::string>& deep_learning_keywords() {
  static const std::vector<std::string> keywords = {
      "Attention Mechanism", "Auto Encoder", "Auto Regressive Model",
      "Autoencoder", "BERT", "Back Propagation", "Backpropagation",
      "Bidirectional Encoder Representations", "Boltzmann Machine", "CNN",
      "CNTK", "CUDA", "Caffe", "Caffe2", "Chainer", "Convolutional Network",
      "DL4J", "DLib", "DNN", "Deep Architecture", "Deep Autoencoder",
      "Deep Belief Network", "Deep Convolutional",
      "Deep Deterministic Policy Gradient", "Deep Embedding",
      "Deep Encoder Decoder", "Deep Generative Model",
      "Deep Generative Network", "Deep Hashing Method", "Deep Learning",
      "Deep Linear Network", "Deep Metric Learning", "Deep Model",
      "Deep Network", "Deep Probabilistic Model", "Deep Q Learning",
      "Deep Q Network", "Deep Recurrent Network",
      "Deep Reinforcement Learning", "Deep Representation Learning",
      "Deep Supervised Hashing", "Deeplearning4j", "Depth Wise Convolution",
      "DyNet", "Encoder Decoder", "GAN", "GPU", "GRU",
      "Gated Recurrent Unit", "Generative Adversarial Net",
      "Generative Adversarial Network", "GloVe", "Gluon", "Gradient Descent",
      "Graphics Processing Unit", "GraspNET", "Hopfield Network", "Keras",
      "LSTM", "Lasagne", "Liquid State Machine", "Long Short Term Memory",
      "Max Pooling", "Microsoft Cognitive Toolkit", "Multilayer Perceptron",
      "Mxnet", "NVIDIA", "Neural Architecture", "Neural Language Model",
      "Neural Machine Translation", "Neural Model", "Neural Net",
      "Neural Network", "Neural Style Transfer", "Neural Turing Machine",
      "ONNX", "OpenNN", "Opencl", "Opencv", "PaddlePaddle", "Pytorch", "RNN",
      "Radial Basis Function Network", "ReLU", "Recurrent Network", "Resnet",
      "Seq2seq", "Sonnet", "Spiking Neural Network", "TPU",
      "Tensor Processing Unit", "Tensorflow", "Tflearn", "Theano", "Titan X",
      "Torch", "Transfer Learning", "VAE", "Variational Autoencoder",
      "Word2vec", "cuDNN"};
  return keywords;
}

bool contains_keyword(const std::string& text, const std::string& keyword) {
  const std::string hay = lowercase(text);
  const std::string needle = lowercase(keyword);
  if (needle.empty()) return false;
  if (needle.size() >= 5) return hay.find(needle) != std::string::npos;
  // Short phrases match whole tokens only.
  size_t pos = 0;
  while ((pos = hay.find(needle, pos)) != std::string::npos) {
    const bool left_ok =
        pos == 0 || !std::isalnum(static_cast<unsigned char>(hay[pos - 1]));
    const size_t end = pos + needle.size();
    const bool right_ok =
        end == hay.size() ||
        !std::isalnum(static_cast<unsigned char>(hay[end]));
    if (left_ok && right_ok) return true;
    ++pos;
  }
  return false;
}

}  // namespace gapcast
