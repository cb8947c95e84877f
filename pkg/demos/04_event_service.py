"""The per-fridge event service: publish, fold, long-poll.

Each fridge is an isolated stream of immutable envelopes with contiguous
sequence numbers.  Current state is literally a fold of the history, and a
long poll blocks until something new lands on that fridge (and only that
fridge).
"""

import threading
import time

from coldbench import FridgeHub, fold_state

hub = FridgeHub()
kitchen = hub.register_fridge()
office = hub.register_fridge()
print(f"registered fridges: {kitchen} and {office}")


def item(item_id, name, position):
    return {
        "item_id": item_id, "name": name, "state": "complete",
        "position": position, "added_at": 1000, "removed_at": None, "activity_id": 1,
    }


hub.publish(kitchen, {"kind": "door_open", "emitted_at": 500})
hub.publish(kitchen, {"kind": "add", "position": 2, "item": item("i1", "coke", 2), "emitted_at": 2000})
hub.publish(kitchen, {"kind": "add", "position": 0, "item": item("i2", "milk", 0), "emitted_at": 3000})
hub.publish(kitchen, {"kind": "door_close", "emitted_at": 4000})

state = hub.get_state(kitchen)
print("\nkitchen after one activity:")
for pos, rec in sorted(state.positions.items()):
    print(f"  position {pos}: {rec['name'] if rec else '-'}")

print(f"state equals fold(history): "
      f"{state.to_dict() == fold_state(hub.events(kitchen)).to_dict()}")
print(f"office is untouched: {hub.get_state(office).to_dict()['positions'] == {}}")

print("\n=== long poll ===")
received = []

def subscriber():
    # resume from the current head; block until the next envelope
    cursor = hub.head_seq(kitchen)
    received.extend(hub.poll(kitchen, cursor=cursor, timeout_ms=5000))

thread = threading.Thread(target=subscriber)
thread.start()
time.sleep(0.1)
print("subscriber is blocked; publishing a removal...")
hub.publish(kitchen, {
    "kind": "remove", "position": 2,
    "item": {**item("i1", "coke", 2), "state": "removed", "removed_at": 9000},
    "emitted_at": 9000,
})
thread.join()
print(f"subscriber woke with: {[(e.seq, e.kind, e.position) for e in received]}")
print(f"position 2 now empty: {hub.get_state(kitchen).positions[2] is None}")
print(f"history retains both actions: {[h.action for h in hub.get_history(kitchen)]}")
