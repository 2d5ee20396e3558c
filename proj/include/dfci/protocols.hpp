#pragma once

// The three DFCI protocols (Init, Investigation, Trial) and their sequential
// composition into one case.

#include <memory>
#include <string>
#include <vector>

#include "dfci/error.hpp"
#include "dfci/msc.hpp"

namespace dfci {

namespace detail {

inline Item msg(std::string id, std::string from, std::string to, std::string label,
                std::optional<Phase> phase = std::nullopt, bool optional = false) {
  return Item{MessageSpec{std::move(id), std::move(from), std::move(to), std::move(label),
                          optional ? Modality::optional : Modality::mandatory, phase,
                          std::nullopt}};
}

inline Item scene(std::string name) { return Item{Scene{std::move(name)}}; }
inline Item note(std::string text) { return Item{Note{std::move(text)}}; }

inline const Lifeline kProsecutor{"Prosecutor", "Prosecutor", ""};
inline const Lifeline kSuspect{"Suspect", "Suspect", ""};
inline const Lifeline kDefendant{"Defendant", "Defendant", ""};
inline const Lifeline kDFExpert{"DFExpert", "DF Expert", ""};
inline const Lifeline kDFTools{"DFTools", "DF Tools", ""};
inline const Lifeline kJudge{"Judge", "Judge", ""};
inline const Lifeline kThirdParty{"ThirdParty", "Third Party", ""};
inline const Lifeline kPolice{"Police", "Police", ""};

inline MscDocument finish(MscDocument doc) {
  annotate_scenes(doc);
  return doc;
}

}  // namespace detail

inline MscDocument protocol_init() {
  using namespace detail;
  MscDocument doc;
  doc.name = "init";
  doc.lifelines = {kThirdParty, kProsecutor, kPolice, kDFExpert, kSuspect};
  doc.body = {
      msg("0", "ThirdParty", "Prosecutor", "notitia criminis"),
      msg("1", "Prosecutor", "Police", "instructs further orders for preliminary investigations"),
      note("steps 2-5 are numbering gaps: drawn in the figure, absent from the prose"),
      msg("6", "Prosecutor", "DFExpert", "retain for case"),
      scene("crime scene"),
      msg("7", "Prosecutor", "Suspect", "notify of investigation"),
      msg("8", "Prosecutor", "Suspect", "show search warrant"),
  };
  doc.objectives = {{"suspect_has_warrant", "the Suspect gets a search warrant",
                     Predicate::eventually("8")}};
  return finish(std::move(doc));
}

inline MscDocument protocol_investigation() {
  using namespace detail;
  using P = Phase;
  MscDocument doc;
  doc.name = "investigation";
  doc.lifelines = {kProsecutor, kSuspect, kDFExpert, kDFTools};
  doc.body = {
      make_loop({
          msg("1", "Prosecutor", "Suspect", "interrogation question"),
          msg("2", "Suspect", "Prosecutor", "answer"),
      }),
      msg("3", "Prosecutor", "DFExpert", "additional case information", P::Identification),
      msg("4", "DFExpert", "Prosecutor", "list of target devices", P::Identification),
      msg("5", "DFExpert", "Suspect", "request/seize devices", P::Collection),
      msg("6", "DFExpert", "Suspect", "show seals", P::Collection, true),
      msg("7", "Suspect", "DFExpert", "system under investigation", P::Collection),
      scene("Digital Forensics Laboratory"),
      msg("8", "DFExpert", "DFTools", "system + filters", P::Examination),
      msg("9", "DFTools", "DFExpert", "extracted data/information", P::Examination),
      msg("10", "DFExpert", "Prosecutor", "digital evidence report", P::Analysis),
  };
  doc.objectives = {{"evidence_set_obtained",
                     "the Police and the Prosecutor obtain a set of information",
                     Predicate::eventually("10")}};
  doc.custody_span = CustodySpan{"5", "10"};
  return finish(std::move(doc));
}

namespace detail {

// Predicate for the trial's fair-process objective: the run conforms and
// every technical request put to the DF Expert got its answer.
inline Predicate fair_process(const std::string& prefix) {
  return Predicate::both(
      Predicate::both(Predicate::both(Predicate::conformant(),
                                      Predicate::responds(prefix + "3", prefix + "4")),
                      Predicate::responds(prefix + "5", prefix + "6")),
      Predicate::responds(prefix + "7", prefix + "8"));
}

}  // namespace detail

inline MscDocument protocol_trial() {
  using namespace detail;
  constexpr auto pres = Phase::Presentation;
  MscDocument doc;
  doc.name = "trial";
  doc.lifelines = {kProsecutor, kDefendant, kJudge, kDFExpert};
  doc.body = {
      msg("1", "Prosecutor", "Judge", "documentation"),
      scene("court"),
      make_loop({
          msg("2a", "Prosecutor", "Judge", "charge proof", pres),
          msg("2b", "Defendant", "Judge", "defence proof", pres),
          make_opt({msg("3", "Prosecutor", "DFExpert", "technical request", pres),
                    msg("4", "DFExpert", "Prosecutor", "technical answer", pres)}),
          make_opt({msg("5", "Judge", "DFExpert", "technical request", pres),
                    msg("6", "DFExpert", "Judge", "technical answer", pres)}),
          make_opt({msg("7", "Defendant", "DFExpert", "technical request", pres),
                    msg("8", "DFExpert", "Defendant", "technical answer", pres)}),
      }),
      msg("9a", "Judge", "Prosecutor", "sentence", Phase::Decision),
      msg("9b", "Judge", "Defendant", "sentence", Phase::Decision),
  };
  doc.objectives = {
      {"sentence_delivered", "at least the Defendant obtains a sentence",
       Predicate::eventually("9b")},
      {"fair_process", "the Defendant obtains a fair process", fair_process("")},
  };
  return finish(std::move(doc));
}

namespace detail {

inline Predicate qualify(Predicate p, const std::string& prefix) {
  if (!p.msg_id.empty()) p.msg_id = prefix + p.msg_id;
  if (!p.reply_id.empty()) p.reply_id = prefix + p.reply_id;
  for (auto& op : p.operands) op = qualify(std::move(op), prefix);
  return p;
}

inline void qualify_items(std::vector<Item>& items, const std::string& prefix) {
  for (auto& item : items) {
    if (auto* m = std::get_if<MessageSpec>(&item.node)) {
      m->msg_id = prefix + m->msg_id;
    } else if (auto* f = std::get_if<Fragment>(&item.node)) {
      qualify_items(f->body, prefix);
    }
  }
}

}  // namespace detail

struct DfciCase {
  MscDocument init;
  MscDocument investigation;
  MscDocument trial;
  MscDocument composition;
  CustodySpan custody_span;
};

// Init ; Investigation ; Trial on a shared set of lifelines. Message ids are
// qualified with the protocol name ("trial.9b"), objective ids are kept; the
// trial's Defendant is the investigation's Suspect under another name.
inline DfciCase compose_case() {
  DfciCase c{protocol_init(), protocol_investigation(), protocol_trial(), {}, {}};
  MscDocument& doc = c.composition;
  doc.name = "dfci_case";
  doc.lifelines = {detail::kThirdParty, detail::kProsecutor, detail::kPolice,
                   detail::kDFExpert,   detail::kSuspect,    detail::kDFTools,
                   detail::kJudge};
  doc.aliases = {{"Defendant", "Suspect"}};

  for (const MscDocument* part : {&c.init, &c.investigation, &c.trial}) {
    const std::string prefix = part->name + ".";
    doc.body.push_back(detail::note("protocol " + part->name));
    std::vector<Item> body = part->body;
    detail::qualify_items(body, prefix);
    for (auto& item : body) doc.body.push_back(std::move(item));
    for (const auto& obj : part->objectives) {
      doc.objectives.push_back({obj.id, obj.description,
                                detail::qualify(obj.predicate, prefix)});
    }
  }
  c.custody_span = CustodySpan{"investigation.5", "trial.9b"};
  doc.custody_span = c.custody_span;
  annotate_scenes(doc);
  return c;
}

inline std::vector<std::string> builtin_names() {
  return {"init", "investigation", "trial", "case"};
}

inline MscDocument builtin(std::string_view name) {
  if (name == "init") return protocol_init();
  if (name == "investigation") return protocol_investigation();
  if (name == "trial") return protocol_trial();
  if (name == "case") return compose_case().composition;
  throw Error(ErrorKind::InvalidDocument, "unknown built-in model '" + std::string(name) + "'");
}

}  // namespace dfci
