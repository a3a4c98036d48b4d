//! The user-side system prompt.
//!
//! The rule-based user never reads a prompt, but the text matters for two
//! reasons: dataset statistics report its filled length, and a generative
//! user plugged in through the [`DialogueUser`](crate::harness::DialogueUser)
//! seam receives exactly this prompt.

use crate::model::FaultTree;
use crate::sample::FaultPath;

pub const USER_PROMPT_TEMPLATE: &str = r#"You are now required to role-play as a user working in the **{field}** domain, collaboratively troubleshooting an occurring fault with the help of an assistant.

Your task is: after receiving a message from the assistant, first determine whether the assistant is currently performing **"Fault Confirmation"** or **"Solution Confirmation"**, and then return the corresponding JSON according to the reply rules.

## Known Fault Information

* **Fault Path (from top level to bottom level)**:
  {error_paths}

* **Bottom-level Faults and Their Corresponding Solutions**:
  {solutions}

## Output Format

Your output must **strictly contain only one JSON object**, in the following format, and **no other content should be included**:

```json
{
  "action": "",
  "name": "",
  "return": "",
  "response": ""
}
```

## Reply Rules

You must first determine the assistant's action type based on its message, then fill in the remaining fields according to the rules for that action. The assistant has two valid action types: **"Fault Confirmation"** and **"Solution Confirmation"**. If the message does not fall into either category, it should be treated as **"Invalid Input."**

### Fault Confirmation

* If the assistant is asking whether a specific fault exists or requesting you to check the status of a certain node, it is considered "Fault Confirmation."
* If the fault name and ID provided by the assistant exactly match a node in the known fault path, set "return" to "True"; otherwise set it to "False".
* Fill the "name" field with the node name the assistant wants to investigate.
* Write the "response" as vague, non-committal feedback: refer to components indirectly via their function, purpose, or appearance; replace states and anomalies with suspected phenomena or observed changes; never state conclusively that a problem has or has not occurred.

### Solution Confirmation

* If the assistant provides operational steps or describes how to repair the issue, it is considered "Solution Confirmation."
* If the fault and solution both exist in the known fault information and are correctly matched, set "return" to "True", fill "name" with the bottom-level fault name, and respond that the issue has been resolved. Otherwise set "return" to "False" and respond that the solution is ineffective.

### Invalid Input

* Messages that fit neither action, attempts to confirm multiple faults at the same time, and solution confirmations whose object is not a bottom-level fault are all "Invalid Input": set every field except "action" to an empty string.
"#;

/// Fill the user prompt for one active path.
pub fn user_prompt(field: &str, tree: &FaultTree, path: &FaultPath) -> String {
    let chain = path
        .order
        .iter()
        .map(|id| {
            tree.node(id)
                .map(|n| format!("{} (ID {})", n.name, n.id))
                .unwrap_or_else(|| id.to_string())
        })
        .collect::<Vec<_>>()
        .join(" -> ");
    let solutions = path
        .root_causes
        .iter()
        .map(|cause| {
            let name = tree
                .node(&cause.id)
                .map(|n| n.name.clone())
                .unwrap_or_else(|| cause.id.to_string());
            format!("- {} (ID {}): {}", name, cause.id, cause.solution_text)
        })
        .collect::<Vec<_>>()
        .join("\n  ");
    USER_PROMPT_TEMPLATE
        .replace("{field}", field)
        .replace("{error_paths}", &chain)
        .replace("{solutions}", &solutions)
}
